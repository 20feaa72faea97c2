import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.sparse.linalg import lsqr as scipy_lsqr

from stable_gft.linalg import (
    LinalgError,
    LsqrSettings,
    SchurError,
    SingularMatrixError,
    SparseShift,
    SylvesterOperator,
    dense_min_norm,
    invert,
    lsqr_min_norm,
    schur,
    singular_extremes,
    unvec,
    vec,
)
from stable_gft.sgfa import contract

from conftest import random_dense


def pinv_min_norm(M, b):
    # rank cutoff as in numpy.linalg.matrix_rank
    return np.linalg.pinv(M, rcond=max(M.shape) * np.finfo(float).eps) @ b


# --- SparseShift -----------------------------------------------------------


def test_sparse_shift_canonical_order():
    A = SparseShift.from_triples(3, [(2, 0, 1.0), (0, 2, 2.0), (0, 1, 3.0)])
    assert A.triples() == [(0, 1, 3.0), (0, 2, 2.0), (2, 0, 1.0)]
    assert A.nnz == 3 and not A.is_complex


@pytest.mark.parametrize("triples, msg", [
    ([(0, 0, 1.0), (0, 0, 2.0)], "duplicate"),
    ([(0, 3, 1.0)], "out of range"),
    ([(0, 1, 0.0)], "nonzero"),
    ([(0, 1, np.nan)], "finite"),
])
def test_sparse_shift_rejects(triples, msg):
    with pytest.raises(LinalgError, match=msg):
        SparseShift.from_triples(3, triples)


def test_sparse_shift_dense_scipy_agree(rng):
    A = random_dense(rng, 7, complex_=True)
    s1 = SparseShift.from_dense(A)
    s2 = SparseShift.from_scipy(sp.csr_matrix(A))
    assert s1 == s2
    np.testing.assert_array_equal(s1.to_dense(), A)
    np.testing.assert_array_equal(s1.conj_transpose().to_dense(), A.conj().T)


def test_hermitian_detection():
    A = np.array([[0, 1 + 1j], [1 - 1j, 2]])
    assert SparseShift.from_dense(A).is_hermitian()
    assert not SparseShift.from_dense(np.triu(A)).is_hermitian()


@given(st.integers(1, 6).flatmap(lambda n: arrays(np.complex128, (n, n), elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))))
def test_vec_unvec_roundtrip(X):
    np.testing.assert_array_equal(unvec(vec(X), X.shape[0]), X)
    np.testing.assert_array_equal(vec(X), X.flatten(order="F"))


# --- Schur ------------------------------------------------------------------


@pytest.mark.parametrize("A", [
    np.eye(4),
    np.diag([1.0, 2.0, 3.0]),
    np.array([[0.0, 1.0], [-1.0, 0.0]]),  # real input, complex eigenvalues
    np.diag(np.ones(4), 1),                 # nilpotent Jordan block
    np.zeros((3, 3)),
])
def test_schur_examples(A):
    pair = schur(A)
    n = A.shape[0]
    assert np.all(np.tril(pair.T, -1) == 0)
    np.testing.assert_allclose(pair.U.conj().T @ pair.U, np.eye(n), atol=1e-13)
    np.testing.assert_allclose(pair.U @ pair.T @ pair.U.conj().T, A, atol=1e-12)


def test_schur_rotation_eigenvalues():
    lam = schur(np.array([[0.0, 1.0], [-1.0, 0.0]])).eigenvalues
    lam = lam[np.argsort(lam.imag)]
    np.testing.assert_allclose(lam, [-1j, 1j], atol=1e-14)


def test_schur_is_read_only(rng):
    pair = schur(random_dense(rng, 5))
    with pytest.raises(ValueError):
        pair.T[0, 0] = 1.0


def test_schur_rejects_nonfinite():
    with pytest.raises(LinalgError):
        schur(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_schur_error_carries_message():
    assert "converge" in str(SchurError("complex Schur factorization did not converge"))


@given(st.integers(2, 7), st.integers(0, 10 ** 6), st.booleans())
def test_schur_property(n, seed, complex_):
    A = random_dense(np.random.default_rng(seed), n, complex_=complex_)
    pair = schur(A)
    scale = max(1.0, np.linalg.norm(A))
    assert np.linalg.norm(A - pair.U @ pair.T @ pair.U.conj().T) <= 1e-12 * scale
    assert np.linalg.norm(pair.U.conj().T @ pair.U - np.eye(n)) <= n * 1e-12


# --- Sylvester operator ---------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_operator_matches_kronecker(rng, n):
    A = random_dense(rng, n, complex_=True) + np.eye(n)
    T = np.triu(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    op = SylvesterOperator(A, T)
    K = np.kron(np.eye(n), A) - np.kron(T.T, np.eye(n))
    np.testing.assert_allclose(op.to_dense(), K)
    x = rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)
    np.testing.assert_allclose(op.matvec(x), K @ x, atol=1e-12)
    np.testing.assert_allclose(op.rmatvec(x), K.conj().T @ x, atol=1e-12)
    X = unvec(x, n)
    np.testing.assert_allclose(op.apply(X), A @ X - X @ T, atol=1e-12)


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_adjoint_identity(n, seed):
    r = np.random.default_rng(seed)
    op = SylvesterOperator(random_dense(r, n, complex_=True) + np.eye(n),
                           np.triu(r.standard_normal((n, n))))
    x = r.standard_normal(n * n) + 1j * r.standard_normal(n * n)
    y = r.standard_normal(n * n) + 1j * r.standard_normal(n * n)
    lhs = np.vdot(op.matvec(x), y)
    rhs = np.vdot(x, op.rmatvec(y))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_operator_shape_checks(rng):
    op = SylvesterOperator(np.eye(3), np.eye(3))
    with pytest.raises(LinalgError):
        op.matvec(np.zeros(8))
    with pytest.raises(LinalgError):
        SylvesterOperator(np.eye(3), np.eye(2))


# --- LSQR -------------------------------------------------------------------------


def sgfa_triple(rng, n, beta=0.5):
    A = (rng.random((n, n)) < 0.35).astype(float)
    A[0, -1] = 1.0
    pair = schur(A)
    T = contract(pair.T, beta)
    F = np.array(pair.U)
    op = SylvesterOperator(A, T)
    return op, vec(F @ T - A @ F)


@pytest.mark.parametrize("seed", range(6))
def test_lsqr_matches_pinv_on_sgfa_steps(seed):
    r = np.random.default_rng(seed)
    op, b = sgfa_triple(r, int(r.integers(2, 9)))
    x, stats = lsqr_min_norm(op, b, LsqrSettings(max_iters=1000, atol=1e-14, btol=1e-14))
    ref = pinv_min_norm(op.to_dense(), b)
    assert np.linalg.norm(x - ref) <= 1e-8
    assert stats.iterations <= 1000


def test_lsqr_full_rank_matches_scipy(rng):
    n = 5
    A = random_dense(rng, n) + 3 * np.eye(n)
    T = np.triu(rng.standard_normal((n, n)))  # spectra disjoint: nonsingular system
    op = SylvesterOperator(A, T)
    b = rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)
    s = LsqrSettings(max_iters=2000, atol=1e-14, btol=1e-14)
    x, _ = lsqr_min_norm(op, b, s)
    ref = scipy_lsqr(op.as_linear_operator(), b, atol=1e-14, btol=1e-14, iter_lim=2000)[0]
    np.testing.assert_allclose(x, ref, atol=1e-8)
    np.testing.assert_allclose(op.matvec(x), b, atol=1e-8)


def test_lsqr_zero_rhs():
    op = SylvesterOperator(np.eye(3), np.eye(3))
    x, stats = lsqr_min_norm(op, np.zeros(9))
    assert not x.any() and stats.iterations == 0 and stats.reason == "zero_rhs"


def test_lsqr_estimates_monotone(rng):
    op, b = sgfa_triple(rng, 8)
    _, stats = lsqr_min_norm(op, b, LsqrSettings(max_iters=40))
    est = np.asarray(stats.residual_estimates)
    assert np.all(np.diff(est) <= 1e-12 * est[0])
    assert stats.residual_norm <= est[0]


def test_lsqr_true_residual_reported(rng):
    op, b = sgfa_triple(rng, 6)
    x, stats = lsqr_min_norm(op, b, LsqrSettings(max_iters=3))
    assert stats.hit_max_iters and stats.iterations == 3
    assert stats.residual_norm == pytest.approx(np.linalg.norm(op.matvec(x) - b), rel=1e-10)


@pytest.mark.parametrize("kwargs", [{"max_iters": 0}, {"atol": 0.0}, {"btol": 1.5}, {"conlim": 1.0}])
def test_lsqr_settings_validation(kwargs):
    with pytest.raises(LinalgError):
        LsqrSettings(**kwargs)


def test_dense_min_norm_matches_pinv(rng):
    op, b = sgfa_triple(rng, 6)
    x, stats = dense_min_norm(op, b)
    np.testing.assert_allclose(x, pinv_min_norm(op.to_dense(), b), atol=1e-10)
    assert stats.reason == "dense"


# --- dense helpers ------------------------------------------------------------------


def test_singular_extremes_known():
    smin, smax = singular_extremes(np.diag([3.0, 0.5, 2.0]))
    assert (smin, smax) == pytest.approx((0.5, 3.0))


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_singular_extremes_vs_svd(n, seed):
    M = np.random.default_rng(seed).standard_normal((n, n))
    s = np.linalg.svd(M, compute_uv=False)
    assert singular_extremes(M) == pytest.approx((s[-1], s[0]), rel=1e-12, abs=1e-300)


def test_invert_roundtrip(rng):
    M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    np.testing.assert_allclose(invert(M) @ M, np.eye(6), atol=1e-12)


def test_invert_singular_reports_pivot():
    M = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError) as info:
        invert(M, which="F")
    assert info.value.which == "F"
