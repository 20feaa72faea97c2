import numpy as np
import pytest

from stable_gft import experiments as ex
from stable_gft.graph_io import RandomGraphSpec, erdos_renyi, jordan_block
from stable_gft.sgfa import SgfaConfig


def test_eig_basis_hermitian_uses_orthonormal_vectors():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    F, lam = ex.eig_basis(A)
    np.testing.assert_allclose(F.conj().T @ F, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(np.sort(lam.real), [1, 3])


def test_eig_basis_defective_is_singular():
    assert ex.eig_sigma_min(jordan_block(4)) <= 1e-12


def test_tails_extremes_zero():
    rows = ex.instability_tails(n=15, p_grid=(0.0, 1.0), trials=4, variants=(True,))
    assert [r["probability"] for r in rows] == [0.0, 0.0]


def test_tails_parallel_matches_serial(monkeypatch):
    kw = dict(n=20, p_grid=(0.05,), trials=6, variants=(False,))
    serial = ex.instability_tails(workers=1, **kw)
    par = ex.instability_tails(workers=3, **kw)
    assert serial == par


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("STABLE_GFT_THREADS", "4")
    assert ex.thread_count() == 4
    monkeypatch.setenv("STABLE_GFT_THREADS", "many")
    assert ex.thread_count() == 1


def test_parallel_map_order():
    assert ex.parallel_map(lambda x: x * x, range(10), workers=4) == [x * x for x in range(10)]


def test_default_grid_shape():
    assert len(ex.DEFAULT_ALPHA_GRID) == 6 and len(ex.DEFAULT_BETA_GRID) == 14


def test_sweep_grid_rows_and_monotonicity_helper():
    A = erdos_renyi(RandomGraphSpec(10, 0.3, True, 2))
    rows = ex.sweep_grid(A, (1e-1, 1e-2), (0.5,), SgfaConfig())
    assert [(r["beta"], r["alpha"]) for r in rows] == [(0.5, 1e-1), (0.5, 1e-2)]
    fake = [{"beta": 0.5, "alpha": 1e-1, "accuracy": 1.0}, {"beta": 0.5, "alpha": 1e-2, "accuracy": 2.0}]
    assert len(ex.row_monotonicity_violations(fake)) == 1


def test_left_right_symmetric_exact():
    r = np.random.default_rng(3)
    M = r.standard_normal((8, 8))
    rows = ex.left_right(M + M.T, (1e-2, 1e-4), beta=0.5)
    assert all(row["discrepancy"] <= 1e-8 for row in rows)


def test_jordan_check_rows():
    rows = ex.jordan_check(3, 0.5, k_max=2)
    assert [r["k"] for r in rows] == [0, 1, 2]
    assert rows[1]["sigma_min"] == pytest.approx(1 / 3)


def test_epsilon_sweep_flags_singular():
    rows = ex.epsilon_sweep(jordan_block(20), (0.5, 0.01))
    assert rows[0]["invertible"] == 1 and rows[1]["invertible"] == 0
