"""Stable Graph Fourier Approximation (SGFA).

Starting from the complex Schur pair ``(F0, T0) = (U, T)`` of the shift, each
outer iteration

1. contracts the strictly upper triangular part of ``T_k`` by ``beta``, and
2. replaces ``F_k`` by its orthogonal projection onto ``{F : A F = F T_{k+1}}``,

until ``sigma_min(F_k)`` drops below ``alpha``.  The objective
``||A F_k - F_k Lambda||_F`` decays at least like ``beta**k``.

Also here: the epsilon-scaled Schur construction (diagonal similarity that
shrinks the off-diagonal of ``T`` at the cost of ``sigma_min(F)``) and the
closed-form iterates for the nilpotent Jordan block, used as an oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .linalg import (
    InnerSolveStats,
    LinalgError,
    LsqrSettings,
    SingularMatrixError,
    SparseShift,
    SylvesterOperator,
    _as_shift,
    dense_min_norm,
    invert,
    lsqr_min_norm,
    schur,
    singular_extremes,
    unvec,
    vec,
)

__all__ = [
    "SgfaError",
    "Termination",
    "TerminationMetric",
    "SgfaConfig",
    "IterationRecord",
    "SgfaState",
    "SgfaResult",
    "contract",
    "offdiag_norm",
    "sgfa_steps",
    "sgfa_run",
    "sgfa_run_left",
    "sgfa_run_alphas",
    "EpsilonSchur",
    "EpsilonUnderflowError",
    "epsilon_schur",
    "epsilon_for_target",
    "JordanOracle",
    "jordan_oracle",
]

HISTORY_AUTO_MAX_N = 2000


class SgfaError(RuntimeError):
    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class Termination(str, enum.Enum):
    STABILITY_FLOOR_HIT = "stability_floor_hit"
    OFFDIAG_CONVERGED = "offdiag_converged"
    MAX_OUTER_REACHED = "max_outer_reached"
    INITIAL_SCHUR_RETURNED = "initial_schur_returned"


class TerminationMetric(str, enum.Enum):
    SIGMA_MIN_VS_ALPHA = "sigma_min_vs_alpha"
    CONDITION_VS_INV_ALPHA = "condition_vs_inv_alpha"


@dataclass(frozen=True)
class SgfaConfig:
    """Parameters of one SGFA run.

    ``offdiag_tol`` stops the run once ``||T_k - Lambda||_F`` falls below
    ``offdiag_tol * ||T_0||_F``.  ``inner_solver="dense"`` solves the projection
    exactly through the Kronecker matrix and is only allowed for small graphs.
    ``track_history=None`` records full per-iteration metrics for
    ``n <= 2000`` only.
    """

    alpha: float = 1e-6
    beta: float = 0.5
    max_outer: int = 500
    offdiag_tol: float = 1e-12
    lsqr: LsqrSettings = field(default_factory=LsqrSettings)
    termination_metric: TerminationMetric = TerminationMetric.SIGMA_MIN_VS_ALPHA
    track_history: bool | None = None
    inner_solver: str = "lsqr"
    dense_max_n: int = 64

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if int(self.max_outer) < 1:
            raise ValueError(f"max_outer must be >= 1, got {self.max_outer}")
        if self.offdiag_tol < 0:
            raise ValueError("offdiag_tol must be >= 0")
        if self.inner_solver not in ("lsqr", "dense"):
            raise ValueError(f"inner_solver must be 'lsqr' or 'dense', got {self.inner_solver!r}")
        object.__setattr__(self, "termination_metric", TerminationMetric(self.termination_metric))

    def history_enabled(self, n: int) -> bool:
        if self.track_history is None:
            return n <= HISTORY_AUTO_MAX_N
        return bool(self.track_history)


@dataclass(frozen=True)
class IterationRecord:
    k: int
    accuracy: float
    sigma_min: float
    sigma_max: float
    offdiag: float
    F_norm: float
    feasibility: float = float("nan")
    inverse_error: float = float("nan")
    inner: InnerSolveStats | None = None
    accepted: bool = True

    @property
    def condition(self) -> float:
        return self.sigma_max / self.sigma_min if self.sigma_min > 0 else math.inf

    def as_row(self) -> dict:
        inner = self.inner
        return {
            "iteration": self.k,
            "accuracy": self.accuracy,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "condition": self.condition,
            "inverse_error": self.inverse_error,
            "offdiag": self.offdiag,
            "F_norm": self.F_norm,
            "feasibility": self.feasibility,
            "inner_iterations": inner.iterations if inner else 0,
            "inner_residual": inner.residual_norm if inner else 0.0,
            "inner_reason": inner.reason if inner else "",
            "inner_seconds": inner.seconds if inner else 0.0,
            "accepted": int(self.accepted),
        }


@dataclass(frozen=True, eq=False)
class SgfaState:
    """Iterate ``(F_k, T_k)`` with its metrics."""

    F: np.ndarray
    T: np.ndarray
    k: int
    record: IterationRecord


@dataclass(frozen=True, eq=False)
class SgfaResult:
    F: np.ndarray
    Lambda: np.ndarray
    T: np.ndarray
    iterations_run: int
    termination: Termination
    history: tuple
    mode: str = "right"

    @property
    def final_record(self) -> IterationRecord:
        return next(r for r in reversed(self.history) if r.accepted and r.k == self.iterations_run)

    @property
    def sigma_min(self) -> float:
        return self.final_record.sigma_min


def contract(T, beta: float) -> np.ndarray:
    """Scale the strictly upper triangular part of ``T`` by ``beta``.

    The diagonal is copied untouched, so it stays bit-identical.
    """
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise LinalgError(f"T must be square, got shape {T.shape}")
    if np.any(np.tril(T, -1) != 0):
        raise LinalgError("contract expects an upper triangular matrix")
    out = np.array(T, dtype=np.complex128, copy=True)
    iu = np.triu_indices(T.shape[0], 1)
    out[iu] *= beta
    return out


def offdiag_norm(T) -> float:
    """``||T - diag(T)||_F`` for triangular ``T``."""
    return float(np.linalg.norm(np.triu(T, 1)))


def _record(A: SparseShift, F, T, lam, k, inner, full: bool, accepted=True) -> IterationRecord:
    AF = A.csr @ F
    accuracy = float(np.linalg.norm(AF - F * lam[None, :]))
    smin, smax = singular_extremes(F)
    feasibility = inv_err = float("nan")
    if full:
        feasibility = float(np.linalg.norm(AF - F @ T))
        try:
            Finv = invert(F)
            eye = np.eye(F.shape[0])
            inv_err = float(max(np.linalg.norm(F @ Finv - eye), np.linalg.norm(Finv @ F - eye)))
        except SingularMatrixError:
            inv_err = math.inf
    return IterationRecord(
        k=k,
        accuracy=accuracy,
        sigma_min=smin,
        sigma_max=smax,
        offdiag=offdiag_norm(T),
        F_norm=float(np.linalg.norm(F)),
        feasibility=feasibility,
        inverse_error=inv_err,
        inner=inner,
        accepted=accepted,
    )


def sgfa_steps(A, cfg: SgfaConfig | None = None) -> Iterator[SgfaState]:
    """Yield ``(F_k, T_k)`` for ``k = 0, 1, 2, ...`` without any stopping rule."""
    cfg = cfg or SgfaConfig()
    A = _as_shift(A)
    n = A.n
    if cfg.inner_solver == "dense" and n > cfg.dense_max_n:
        raise ValueError(f"dense inner solver limited to n <= {cfg.dense_max_n}, got n = {n}")
    full = cfg.history_enabled(n)
    pair = schur(A)
    F = np.array(pair.U)
    T = np.array(pair.T)
    lam = np.diag(T).copy()
    yield SgfaState(F, T, 0, _record(A, F, T, lam, 0, None, full))

    k = 0
    while True:
        T_next = contract(T, cfg.beta)
        op = SylvesterOperator(A, T_next)
        b = vec(F @ T_next - A.csr @ F)
        if cfg.inner_solver == "dense":
            x, stats = dense_min_norm(op, b)
        else:
            x, stats = lsqr_min_norm(op, b, cfg.lsqr)
        F_next = F + unvec(x, n)
        k += 1
        if not np.all(np.isfinite(F_next)):
            raise SgfaError(f"non-finite entries in F at iteration {k}", iteration=k)
        F, T = F_next, T_next
        yield SgfaState(F, T, k, _record(A, F, T, lam, k, stats, full))


def _passes(rec: IterationRecord, cfg: SgfaConfig) -> bool:
    if cfg.termination_metric is TerminationMetric.CONDITION_VS_INV_ALPHA:
        return rec.condition <= 1.0 / cfg.alpha
    return rec.sigma_min >= cfg.alpha


def sgfa_run(A, cfg: SgfaConfig | None = None, callback=None) -> SgfaResult:
    """Run SGFA on the shift ``A``.

    Returns the last iterate that passes the stability test.  If already
    ``F_1`` fails, the Schur vectors ``F_0`` are returned with termination
    ``initial_schur_returned``.  ``callback(state)`` is invoked for every
    computed iterate, including a rejected final one.
    """
    cfg = cfg or SgfaConfig()
    A = _as_shift(A)
    if A.n == 1:
        lam = np.array([A.to_dense()[0, 0]])
        rec = IterationRecord(0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0)
        return SgfaResult(np.ones((1, 1), np.complex128), lam, lam.reshape(1, 1),
                          0, Termination.OFFDIAG_CONVERGED, (rec,))

    steps = sgfa_steps(A, cfg)
    best = next(steps)
    if callback:
        callback(best)
    lam = np.diag(best.T).copy()
    history = [best.record]
    threshold = cfg.offdiag_tol * float(np.linalg.norm(best.T))
    termination = Termination.MAX_OUTER_REACHED

    for state in steps:
        if callback:
            callback(state)
        if not _passes(state.record, cfg):
            history.append(replace(state.record, accepted=False))
            termination = (Termination.INITIAL_SCHUR_RETURNED if state.k == 1
                           else Termination.STABILITY_FLOOR_HIT)
            break
        best = state
        history.append(state.record)
        if state.record.offdiag <= threshold:
            termination = Termination.OFFDIAG_CONVERGED
            break
        if state.k >= cfg.max_outer:
            termination = Termination.MAX_OUTER_REACHED
            break
    steps.close()
    return SgfaResult(best.F, lam, best.T, best.k, termination, tuple(history))


def sgfa_run_left(A, cfg: SgfaConfig | None = None, callback=None) -> SgfaResult:
    """SGFA on ``A^H``: the basis columns approximate left eigenvectors of ``A``.

    The returned eigenvalues are those of ``A^H``, i.e. conjugates of the
    eigenvalues of ``A``.
    """
    A = _as_shift(A)
    res = sgfa_run(A.conj_transpose(), cfg, callback)
    return SgfaResult(res.F, res.Lambda, res.T, res.iterations_run, res.termination,
                      res.history, mode="left")


def sgfa_run_alphas(A, alphas, cfg: SgfaConfig | None = None) -> dict:
    """``{alpha: SgfaResult}`` for several stability levels from one run.

    The iterates do not depend on ``alpha``; it only decides where the run
    stops.  So a single run at the smallest ``alpha`` yields, for every larger
    one, exactly the result :func:`sgfa_run` would return.
    """
    cfg = cfg or SgfaConfig()
    alphas = sorted({float(a) for a in alphas}, reverse=True)
    if not alphas:
        raise ValueError("alphas must be non-empty")
    A = _as_shift(A)
    cfgs = {a: replace(cfg, alpha=a) for a in alphas}
    if A.n == 1:
        return {a: sgfa_run(A, c) for a, c in cfgs.items()}

    best: dict = {}
    failed: dict = {}

    def track(state):
        for a, c in cfgs.items():
            if a in failed:
                continue
            if state.k == 0 or _passes(state.record, c):
                best[a] = state
            else:
                failed[a] = state.k

    full = sgfa_run(A, cfgs[alphas[-1]], callback=track)
    out = {}
    for a in alphas:
        if a in failed:
            k = failed[a]
            hist = list(full.history[:k])
            hist.append(replace(full.history[k], accepted=False))
            term = Termination.INITIAL_SCHUR_RETURNED if k == 1 else Termination.STABILITY_FLOOR_HIT
        else:
            hist, term = list(full.history), full.termination
        st = best[a]
        out[a] = SgfaResult(st.F, full.Lambda, st.T, st.k, term, tuple(hist))
    return out


# ---------------------------------------------------------------------------
# epsilon-scaled Schur construction
# ---------------------------------------------------------------------------


class EpsilonUnderflowError(ArithmeticError):
    def __init__(self, power: int, base: float):
        self.power = power
        self.base = base
        super().__init__(f"scaling factor {base:g}**{power} underflows")


@dataclass(frozen=True, eq=False)
class EpsilonSchur:
    """``A = F_eps T_eps F_eps^{-1}`` with ``|T_eps[i, j]| <= epsilon`` for ``j > i``."""

    F_eps: np.ndarray
    T_eps: np.ndarray
    epsilon: float
    t: float
    theta: float

    @property
    def n(self) -> int:
        return self.F_eps.shape[0]

    @property
    def max_offdiag(self) -> float:
        iu = np.triu_indices(self.n, 1)
        return float(np.abs(self.T_eps[iu]).max()) if iu[0].size else 0.0

    @property
    def sigma_min_bound(self) -> float:
        return min(self.epsilon, 1.0) ** (self.n - 1)


def epsilon_schur(A, epsilon: float) -> EpsilonSchur:
    """Diagonal-similarity rescaling of the complex Schur pair.

    With ``t = max_{j>i} |T_ij|`` the scaling ``D_theta = diag(1, theta, ...,
    theta**(n-1))`` uses ``theta = epsilon`` when ``t <= 1`` and
    ``theta = epsilon / t`` otherwise; then ``F = U D_theta`` and
    ``T_eps = D_theta^{-1} T D_theta``.  For ``epsilon >= 1`` the scaling is
    capped at ``theta <= 1`` (the bound ``|T_eps| <= epsilon`` then already
    holds at ``epsilon = 1``).
    """
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    pair = schur(_as_shift(A))
    n = pair.n
    T = np.array(pair.T)
    iu = np.triu_indices(n, 1)
    t = float(np.abs(T[iu]).max()) if n > 1 else 0.0
    eps = min(epsilon, 1.0)
    theta = eps if t <= 1 else eps / t

    powers = np.arange(n)
    with np.errstate(under="ignore"):
        d = theta ** powers.astype(float)
    tiny = np.finfo(float).tiny
    bad = np.flatnonzero(d < tiny)
    if bad.size:
        raise EpsilonUnderflowError(int(powers[bad[0]]), theta)

    F = pair.U * d[None, :]
    gap = powers[None, :] - powers[:, None]
    with np.errstate(under="ignore"):
        scale = np.where(gap > 0, theta ** np.maximum(gap, 0).astype(float), 1.0)
    T_eps = np.triu(T * scale)
    return EpsilonSchur(F, T_eps, float(epsilon), t, float(theta))


def epsilon_for_target(target: float, n: int, f_norm: float | None = None) -> float:
    """Scaling level that bounds ``||A F - F Lambda||_F`` by ``target``.

    ``f_norm`` defaults to ``sqrt(n)``, the Frobenius norm of the Schur
    vectors, which bounds ``||U D_theta||_F`` for ``theta <= 1``.
    """
    if n < 2:
        return float(target)
    if f_norm is None:
        f_norm = math.sqrt(n)
    return float(target / (f_norm * math.sqrt(0.5 * n * (n - 1))))


# ---------------------------------------------------------------------------
# Jordan block closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JordanOracle:
    """Closed-form SGFA iterate ``k`` on the ``n x n`` nilpotent Jordan block."""

    n: int
    beta: float
    k: int
    gamma_k: float
    F_k_closed: np.ndarray
    sigma_min_closed: float
    accuracy_sq_closed: float

    @property
    def accuracy_closed(self) -> float:
        return math.sqrt(self.accuracy_sq_closed)

    @property
    def sigma_max_closed(self) -> float:
        return self.gamma_k


def _geometric(base: float, n: int) -> float:
    return float(sum(base ** j for j in range(n)))


def jordan_oracle(n: int, beta: float, k: int) -> JordanOracle:
    """``F_k = gamma_k diag(1, beta**k, ..., beta**(k(n-1)))``.

    ``gamma_k`` is the product over ``i = 1..k`` of
    ``sum_j beta**((2i-1)j) / sum_j beta**(2ij)`` (``j = 0..n-1``), from
    projecting the previous diagonal iterate onto the constraint set.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < beta < 1:
        raise ValueError("beta must be in (0, 1)")
    if k < 0:
        raise ValueError("k must be >= 0")
    gamma = 1.0
    for i in range(1, k + 1):
        gamma *= _geometric(beta ** (2 * i - 1), n) / _geometric(beta ** (2 * i), n)
    exps = k * np.arange(n)
    with np.errstate(under="ignore"):
        diag = beta ** exps.astype(float)
    bad = np.flatnonzero(diag < np.finfo(float).tiny)
    if bad.size:
        raise EpsilonUnderflowError(int(exps[bad[0]]), beta)
    F = np.diag(gamma * diag).astype(np.complex128)
    if k == 0:
        # F_0 = I and T_0 = A, whose n-1 superdiagonal ones give the residual
        acc_sq = float(n - 1)
    else:
        acc_sq = gamma ** 2 * float(np.sum(diag[1:] ** 2))
    return JordanOracle(n, beta, k, gamma, F, float(gamma * diag[-1]), acc_sq)
