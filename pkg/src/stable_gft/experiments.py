"""Experiment drivers behind the CLI subcommands.

Each driver returns plain row dicts; writing files is the caller's job.
Trial-level work can be spread over a thread pool sized by
``STABLE_GFT_THREADS`` (default 1); results always come back in input order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .graph_io import RandomGraphSpec, erdos_renyi, jordan_block
from .linalg import SingularMatrixError, _as_shift, invert, singular_extremes
from .metrics import accuracy, align_eigenvalues, inverse_error, lr_discrepancy
from .sgfa import (
    EpsilonUnderflowError,
    SgfaConfig,
    Termination,
    epsilon_schur,
    jordan_oracle,
    sgfa_run_alphas,
    sgfa_steps,
)
from .spectral import SpectralBasis, total_variations

# Default sweep axes: six stability levels, fourteen contraction factors.
DEFAULT_ALPHA_GRID = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_BETA_GRID = (0.01, 0.115, 0.22, 0.32, 0.43, 0.535, 0.64, 0.74, 0.85,
                     0.9, 0.93, 0.95, 0.97, 0.99)
DEFAULT_P_GRID = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09,
                  0.5, 0.93, 0.95, 0.97, 0.99, 1.0)
DEFAULT_EPS_GRID = (0.5, 0.1, 0.01)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("STABLE_GFT_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    items = list(items)
    workers = workers or thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Baseline eigendecomposition and instability tails
# ---------------------------------------------------------------------------


def eig_basis(A):
    """Eigenvector matrix from a dense eigensolver (unit-norm columns).

    Hermitian shifts go through the symmetric solver, as general-purpose
    ``eig`` front ends do; everything else through the nonsymmetric one.
    """
    A = _as_shift(A)
    dense = A.to_dense()
    if A.is_hermitian():
        lam, F = np.linalg.eigh(dense)
        return F.astype(np.complex128), lam.astype(np.complex128)
    if not A.is_complex:
        dense = dense.real
    lam, F = np.linalg.eig(dense)
    return F.astype(np.complex128), lam.astype(np.complex128)


def eig_sigma_min(A) -> float:
    F, _ = eig_basis(A)
    return singular_extremes(F)[0]


def instability_tails(n: int = 100, p_grid=DEFAULT_P_GRID, trials: int = 100,
                      threshold: float = 1e-12, seed: int = 0,
                      variants=(False, True), workers: int | None = None) -> list:
    """Empirical ``P[sigma_min(F_eig) <= threshold]`` per ``(self_loops, p)``.

    Trial ``t`` uses seed ``seed + t`` at every ``p``.
    """
    rows = []
    for self_loops in variants:
        for p in p_grid:
            spec = RandomGraphSpec(n, float(p), bool(self_loops), seed)
            smins = parallel_map(lambda t: eig_sigma_min(erdos_renyi(spec.for_trial(t))),
                                 range(trials), workers)
            hits = sum(s <= threshold for s in smins)
            rows.append({
                "self_loops": int(self_loops),
                "p": float(p),
                "trials": trials,
                "unstable": int(hits),
                "probability": hits / trials,
                "median_sigma_min": float(np.median(smins)),
            })
    return rows


# ---------------------------------------------------------------------------
# SGFA sweeps
# ---------------------------------------------------------------------------


def _summary(shift, cfg: SgfaConfig, res) -> dict:
    smin, smax = singular_extremes(res.F)
    return {
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "accuracy": accuracy(shift, res.F, res.Lambda),
        "sigma_min": smin,
        "condition": smax / smin if smin > 0 else math.inf,
        "inverse_error": inverse_error(res.F, batch=True),
        "iterations": res.iterations_run,
        "termination": res.termination.value,
        "fallback": int(res.termination is Termination.INITIAL_SCHUR_RETURNED),
    }


def sweep_grid(A, alpha_grid=DEFAULT_ALPHA_GRID, beta_grid=DEFAULT_BETA_GRID,
               base: SgfaConfig | None = None, workers: int | None = None,
               keep_results: bool = False) -> list:
    """One SGFA result per ``(beta, alpha)`` cell, row-major in ``beta``.

    Each ``beta`` row costs a single run (see :func:`sgfa_run_alphas`).  With
    ``keep_results`` every row also carries its ``SgfaResult`` under ``"result"``.
    """
    A = _as_shift(A)
    base = base or SgfaConfig()

    def row(beta):
        results = sgfa_run_alphas(A, alpha_grid, replace(base, beta=beta))
        out = []
        for a in alpha_grid:
            r = _summary(A, replace(base, alpha=a, beta=beta), results[float(a)])
            if keep_results:
                r["result"] = results[float(a)]
            out.append(r)
        return out

    return [r for line in parallel_map(row, list(beta_grid), workers) for r in line]


def row_monotonicity_violations(rows, key: str = "accuracy", rtol: float = 0.05) -> list:
    """Cells where decreasing alpha made ``key`` worse by more than ``rtol``.

    Smaller alpha relaxes the stability floor, so SGFA runs longer and accuracy
    should not degrade.
    """
    out = []
    for beta in sorted({r["beta"] for r in rows}):
        line = sorted((r for r in rows if r["beta"] == beta), key=lambda r: -r["alpha"])
        for prev, cur in zip(line, line[1:]):
            if cur[key] > prev[key] * (1 + rtol) + 1e-12:
                out.append((beta, prev["alpha"], cur["alpha"], prev[key], cur[key]))
    return out


def left_right(A, alpha_grid=DEFAULT_ALPHA_GRID, beta: float = 0.43,
               base: SgfaConfig | None = None, workers: int | None = None) -> list:
    """Right basis of ``A`` vs left basis (SGFA on ``A^H``) for each alpha."""
    A = _as_shift(A)
    base = base or SgfaConfig()

    cfg = replace(base, beta=beta)
    right_all, left_all = parallel_map(lambda B: sgfa_run_alphas(B, alpha_grid, cfg),
                                       [A, A.conj_transpose()], workers)

    def one(alpha):
        rres, lres = right_all[float(alpha)], left_all[float(alpha)]
        c = replace(cfg, alpha=alpha)
        right = _summary(A, c, rres)
        left = _summary(A.conj_transpose(), c, lres)
        perm = align_eigenvalues(rres.Lambda, lres.Lambda)
        W = lres.F[:, perm]
        try:
            disc = lr_discrepancy(rres.F, W)
        except SingularMatrixError:
            disc = {"right": math.inf, "left": math.inf, "mean": math.inf}
        return {
            "alpha": alpha,
            "beta": beta,
            "accuracy_right": right["accuracy"],
            "accuracy_left": left["accuracy"],
            "mean_accuracy": 0.5 * (right["accuracy"] + left["accuracy"]),
            "discrepancy_right": disc["right"],
            "discrepancy_left": disc["left"],
            "discrepancy": disc["mean"],
            "discrepancy_over_n": disc["mean"] / A.n,
            "iterations_right": right["iterations"],
            "iterations_left": left["iterations"],
        }

    rows = [one(a) for a in alpha_grid]
    # soft trend check: discrepancy should not grow with alpha
    by_alpha = sorted(rows, key=lambda r: r["alpha"])
    for prev, cur in zip(by_alpha, by_alpha[1:]):
        cur["trend_violation"] = int(cur["discrepancy"] > prev["discrepancy"] * 1.05 + 1e-12)
    by_alpha[0]["trend_violation"] = 0
    return rows


# ---------------------------------------------------------------------------
# Closed-form and construction checks
# ---------------------------------------------------------------------------


def jordan_check(n: int, beta: float, k_max: int = 20, inner_solver: str = "dense",
                 lsqr=None) -> list:
    """SGFA iterates on the Jordan block next to their closed forms."""
    kw = {"lsqr": lsqr} if lsqr is not None else {}
    cfg = SgfaConfig(alpha=1e-300, beta=beta, inner_solver=inner_solver,
                     offdiag_tol=0.0, **kw)
    rows = []
    for state in sgfa_steps(jordan_block(n), cfg):
        o = jordan_oracle(n, beta, state.k)
        rec = state.record
        rows.append({
            "k": state.k,
            "gamma": o.gamma_k,
            "sigma_min": rec.sigma_min,
            "sigma_min_closed": o.sigma_min_closed,
            "accuracy": rec.accuracy,
            "accuracy_closed": o.accuracy_closed,
            "max_entry_error": float(np.abs(state.F - o.F_k_closed).max()),
        })
        if state.k >= k_max:
            break
    return rows


def epsilon_sweep(A, eps_grid=DEFAULT_EPS_GRID) -> list:
    A = _as_shift(A)
    dense = A.to_dense()
    norm_a = np.linalg.norm(dense)
    rows = []
    for eps in eps_grid:
        try:
            es = epsilon_schur(A, eps)
        except EpsilonUnderflowError as exc:
            rows.append({"epsilon": eps, "t": math.nan, "sigma_min": math.nan,
                         "bound": min(eps, 1.0) ** (A.n - 1), "max_offdiag": math.nan,
                         "reconstruction": math.nan, "invertible": 0,
                         "error": str(exc)})
            continue
        smin = singular_extremes(es.F_eps)[0]
        try:
            Finv = invert(es.F_eps)
            rec = float(np.linalg.norm(dense - es.F_eps @ es.T_eps @ Finv))
            invertible = 1
        except SingularMatrixError:
            rec, invertible = math.nan, 0
        rows.append({
            "epsilon": eps,
            "t": es.t,
            "sigma_min": smin,
            "bound": es.sigma_min_bound,
            "max_offdiag": es.max_offdiag,
            "reconstruction": rec,
            "relative_reconstruction": rec / norm_a if norm_a > 0 else rec,
            "invertible": invertible,
            "error": "",
        })
    return rows


def tv_data(A, F, Lambda):
    """TV per column, the TV ordering and the basis used."""
    basis = SpectralBasis.build(F, Lambda, A)
    tv = total_variations(basis, A)
    return basis, tv, basis.tv_order
