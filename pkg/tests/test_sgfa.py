import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stable_gft.graph_io import RandomGraphSpec, erdos_renyi, jordan_block
from stable_gft.linalg import LinalgError, LsqrSettings, SparseShift, schur, singular_extremes
from stable_gft.metrics import accuracy
from stable_gft.sgfa import (
    EpsilonUnderflowError,
    SgfaConfig,
    Termination,
    contract,
    epsilon_schur,
    jordan_oracle,
    offdiag_norm,
    epsilon_for_target,
    sgfa_run,
    sgfa_run_alphas,
    sgfa_run_left,
    sgfa_steps,
)

DENSE = dict(inner_solver="dense")


def er(n=12, p=0.2, seed=3, self_loops=False):
    return erdos_renyi(RandomGraphSpec(n, p, self_loops, seed))


# --- contraction ----------------------------------------------------------------


def test_contract_scales_strict_upper_only():
    T = np.array([[1.0, 2.0, 4.0], [0.0, 3.0, 8.0], [0.0, 0.0, 5.0]])
    out = contract(T, 0.25)
    np.testing.assert_array_equal(np.diag(out), [1, 3, 5])
    np.testing.assert_array_equal(out[np.triu_indices(3, 1)], [0.5, 1.0, 2.0])
    assert T[0, 1] == 2.0  # input untouched


def test_contract_rejects_non_triangular():
    with pytest.raises(LinalgError):
        contract(np.ones((2, 2)), 0.5)


@given(st.integers(1, 8), st.floats(0.01, 0.99), st.integers(0, 10 ** 6))
def test_contract_offdiag_norm_scales(n, beta, seed):
    r = np.random.default_rng(seed)
    T = np.triu(r.standard_normal((n, n)) + 1j * r.standard_normal((n, n)))
    out = contract(T, beta)
    assert np.array_equal(np.diag(out), np.diag(T))
    assert offdiag_norm(out) == pytest.approx(beta * offdiag_norm(T), rel=1e-12, abs=1e-300)


# --- config -------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0.0}, {"alpha": 1.5}, {"beta": 0.0}, {"beta": 1.0},
    {"max_outer": 0}, {"offdiag_tol": -1.0}, {"inner_solver": "qr"},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SgfaConfig(**kwargs)


def test_history_auto_threshold():
    cfg = SgfaConfig()
    assert cfg.history_enabled(2000) and not cfg.history_enabled(2001)
    assert SgfaConfig(track_history=True).history_enabled(10 ** 6)


def test_dense_solver_size_guard():
    with pytest.raises(ValueError, match="dense"):
        next(itertools.islice(sgfa_steps(er(n=70, p=0.05), SgfaConfig(**DENSE)), 1, None))


# --- Jordan closed forms ----------------------------------------------------------


def test_jordan_oracle_reference_values():
    o = jordan_oracle(3, 0.5, 1)
    assert o.gamma_k == pytest.approx(4 / 3)
    assert o.sigma_min_closed == pytest.approx(1 / 3)
    assert o.accuracy_closed == pytest.approx(0.745356, abs=1e-6)
    np.testing.assert_allclose(np.diag(o.F_k_closed), [4 / 3, 2 / 3, 1 / 3])


def test_jordan_oracle_k0_is_identity():
    o = jordan_oracle(4, 0.3, 0)
    np.testing.assert_array_equal(o.F_k_closed, np.eye(4))
    assert o.accuracy_sq_closed == pytest.approx(3.0)


@pytest.mark.parametrize("n, beta", [(3, 0.5), (5, 0.3), (4, 0.7)])
@pytest.mark.parametrize("solver", ["dense", "lsqr"])
def test_sgfa_follows_jordan_closed_form(n, beta, solver):
    cfg = SgfaConfig(alpha=1e-300, beta=beta, inner_solver=solver,
                     lsqr=LsqrSettings(max_iters=500, atol=1e-14, btol=1e-14))
    for state in itertools.islice(sgfa_steps(jordan_block(n), cfg), 8):
        o = jordan_oracle(n, beta, state.k)
        np.testing.assert_allclose(state.F, o.F_k_closed, atol=1e-9)
        assert state.record.sigma_min == pytest.approx(o.sigma_min_closed, rel=1e-6)
        assert state.record.accuracy == pytest.approx(o.accuracy_closed, rel=1e-6)


# --- termination ------------------------------------------------------------------


def test_identity_terminates_first_iteration():
    res = sgfa_run(np.eye(6))
    assert res.iterations_run == 1
    assert res.termination is Termination.OFFDIAG_CONVERGED
    assert res.final_record.accuracy <= 1e-12
    assert res.sigma_min == pytest.approx(1.0)


def test_single_node():
    res = sgfa_run(np.array([[2.5]]))
    assert res.F.shape == (1, 1) and res.Lambda[0] == 2.5


@pytest.mark.parametrize("seed", range(3))
def test_symmetric_input_is_exact(seed):
    r = np.random.default_rng(seed)
    M = r.standard_normal((10, 10))
    A = M + M.T
    res = sgfa_run(A, SgfaConfig(**DENSE))
    assert res.termination is Termination.OFFDIAG_CONVERGED
    assert accuracy(A, res.F, res.Lambda) <= 1e-10
    assert res.sigma_min == pytest.approx(1.0, abs=1e-10)


def test_diagonal_input_freezes():
    A = np.diag([1.0, -2.0, 3.0, 0.5])
    res = sgfa_run(A)
    np.testing.assert_allclose(np.abs(res.F), np.eye(4), atol=1e-14)
    assert res.iterations_run == 1


def test_max_outer_reached():
    cfg = SgfaConfig(alpha=1e-300, beta=0.5, max_outer=3, **DENSE)
    res = sgfa_run(jordan_block(4), cfg)
    assert res.termination is Termination.MAX_OUTER_REACHED
    assert res.iterations_run == 3 and len(res.history) == 4


def test_stability_floor_returns_last_passing_iterate():
    cfg = SgfaConfig(alpha=0.05, beta=0.5, **DENSE)
    res = sgfa_run(jordan_block(3), cfg)
    assert res.termination is Termination.STABILITY_FLOOR_HIT
    assert res.sigma_min >= cfg.alpha
    assert not res.history[-1].accepted and res.history[-1].sigma_min < cfg.alpha
    np.testing.assert_allclose(res.F, jordan_oracle(3, 0.5, res.iterations_run).F_k_closed,
                               atol=1e-12)


def test_initial_schur_fallback():
    cfg = SgfaConfig(alpha=0.9, beta=0.1, **DENSE)
    A = jordan_block(3)
    res = sgfa_run(A, cfg)
    assert res.termination is Termination.INITIAL_SCHUR_RETURNED
    assert res.iterations_run == 0
    np.testing.assert_allclose(res.F, schur(A).U)


def test_condition_metric():
    cfg = SgfaConfig(alpha=1e-2, beta=0.5, termination_metric="condition_vs_inv_alpha", **DENSE)
    res = sgfa_run(jordan_block(4), cfg)
    assert res.final_record.condition <= 1 / cfg.alpha


def test_callback_sees_every_iterate():
    seen = []
    res = sgfa_run(jordan_block(3), SgfaConfig(alpha=0.05, **DENSE), callback=lambda s: seen.append(s.k))
    assert seen == list(range(res.iterations_run + 2))


# --- descent properties ----------------------------------------------------------


def _bound_holds(A, cfg, steps=6):
    A = SparseShift.from_dense(A) if not isinstance(A, SparseShift) else A
    it = sgfa_steps(A, cfg)
    s0 = next(it)
    lam = np.diag(s0.T)
    c0 = offdiag_norm(s0.T) * np.linalg.norm(s0.F)
    prev = s0
    for s in itertools.islice(it, steps):
        slack = A.n * (s.record.inner.residual_norm if s.record.inner else 0.0)
        assert s.record.accuracy <= cfg.beta ** s.k * c0 + slack + 1e-12
        assert np.allclose(np.diag(s.T), lam)
        yield prev, s
        prev = s


@pytest.mark.parametrize("seed", range(3))
def test_accuracy_bound_dense_path(seed):
    cfg = SgfaConfig(beta=0.5, **DENSE)
    for prev, cur in _bound_holds(er(n=10, seed=seed), cfg, steps=4):
        assert cur.record.F_norm <= prev.record.F_norm + 1e-10
        assert cur.record.feasibility <= 1e-10


@pytest.mark.parametrize("seed", range(2))
def test_accuracy_bound_lsqr_path(seed):
    cfg = SgfaConfig(beta=0.6)
    for _ in _bound_holds(er(n=15, seed=seed), cfg, steps=5):
        pass


def test_scaling_shift_scales_accuracy_only():
    A = er(n=8, seed=5).to_dense()
    cfg = SgfaConfig(beta=0.5, **DENSE)
    s1 = list(itertools.islice(sgfa_steps(A, cfg), 4))
    s2 = list(itertools.islice(sgfa_steps(3.0 * A, cfg), 4))
    for a, b in zip(s1, s2):
        # Schur vectors are unique only up to column phases
        assert b.record.sigma_min == pytest.approx(a.record.sigma_min, rel=1e-6)
        assert b.record.F_norm == pytest.approx(a.record.F_norm, rel=1e-9)
        assert b.record.accuracy == pytest.approx(3.0 * a.record.accuracy, rel=1e-6, abs=1e-12)


def test_left_mode_matches_conjugate_spectrum():
    A = er(n=10, seed=7)
    right = sgfa_run(A, SgfaConfig(alpha=1e-3))
    left = sgfa_run_left(A, SgfaConfig(alpha=1e-3))
    assert left.mode == "left"
    key = lambda z: (round(z.real, 8), round(z.imag, 8))
    assert sorted(map(key, right.Lambda)) == sorted(map(key, np.conj(left.Lambda)))


# --- epsilon-scaled Schur ---------------------------------------------------------


@pytest.mark.parametrize("n", [4, 9])
@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_epsilon_schur_bounds(n, eps):
    A = er(n=n, p=0.4, seed=n).to_dense() * 3.0
    es = epsilon_schur(A, eps)
    assert es.max_offdiag <= eps * (1 + 1e-12)
    assert singular_extremes(es.F_eps)[0] <= eps ** (n - 1) + 1e-12
    rec = es.F_eps @ es.T_eps @ np.linalg.inv(es.F_eps)
    assert np.linalg.norm(A - rec) <= 1e-8 * np.linalg.norm(A)


def test_epsilon_branch_for_small_offdiag():
    A = np.array([[1.0, 0.5], [0.0, 2.0]])
    es = epsilon_schur(A, 0.1)
    assert es.t <= 1 and es.theta == pytest.approx(0.1)


def test_epsilon_capped_at_one():
    A = np.array([[0.0, 0.2], [0.0, 1.0]])
    es = epsilon_schur(A, 5.0)
    assert es.theta == 1.0
    np.testing.assert_allclose(es.T_eps, schur(A).T)


def test_epsilon_underflow():
    with pytest.raises(EpsilonUnderflowError):
        epsilon_schur(jordan_block(200), 1e-10)


def test_epsilon_rejects_nonpositive():
    with pytest.raises(ValueError):
        epsilon_schur(np.eye(2), 0.0)


@given(st.floats(1e-6, 1.0), st.integers(2, 50))
def test_epsilon_construction_formula(target, n):
    eps = epsilon_for_target(target, n)
    assert eps * math.sqrt(n) * math.sqrt(n * (n - 1) / 2) == pytest.approx(target)


# --- one run for many alphas ------------------------------------------------------


@pytest.mark.parametrize("A, solver", [(jordan_block(4), "dense"), (er(n=12, seed=11), "lsqr")])
def test_alpha_path_matches_individual_runs(A, solver):
    alphas = (0.5, 1e-1, 1e-2, 1e-4, 0.99)
    cfg = SgfaConfig(beta=0.5, inner_solver=solver)
    many = sgfa_run_alphas(A, alphas, cfg)
    for a in alphas:
        single = sgfa_run(A, SgfaConfig(alpha=a, beta=0.5, inner_solver=solver))
        got = many[a]
        assert got.termination is single.termination
        assert got.iterations_run == single.iterations_run
        np.testing.assert_array_equal(got.F, single.F)
        assert [r.accepted for r in got.history] == [r.accepted for r in single.history]
