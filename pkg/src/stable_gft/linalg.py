"""Dense/sparse kernels used by the SGFA iteration.

Dense matrices are plain ``numpy`` arrays of dtype ``complex128``; the graph
shift is a :class:`SparseShift`.  The Sylvester operator
``X -> A X - X T`` is applied matrix-free and solved in the minimum-norm
least-squares sense with a Golub-Kahan (LSQR) iteration.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "LinalgError",
    "SchurError",
    "SingularMatrixError",
    "as_complex_matrix",
    "SparseShift",
    "SchurPair",
    "schur",
    "SylvesterOperator",
    "apply_operator",
    "apply_adjoint",
    "LsqrSettings",
    "InnerSolveStats",
    "lsqr_min_norm",
    "dense_min_norm",
    "singular_extremes",
    "frobenius",
    "spectral_norm",
    "invert",
    "vec",
    "unvec",
]

UNITARITY_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10
DENSE_FALLBACK_MAX_N = 64


class LinalgError(ValueError):
    """Invalid input to one of the kernels."""


class SchurError(RuntimeError):
    """The Schur factorization failed or violated its invariants."""

    def __init__(self, message: str, info: int | None = None):
        super().__init__(message)
        self.info = info


class SingularMatrixError(ArithmeticError):
    """Raised by :func:`invert` when a pivot is numerically zero."""

    def __init__(self, pivot: float, index: int, which: str | None = None):
        self.pivot = float(pivot)
        self.index = int(index)
        self.which = which
        label = f"{which}: " if which else ""
        super().__init__(
            f"{label}matrix is numerically singular "
            f"(pivot {index} has magnitude {self.pivot:.3e})"
        )


def as_complex_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate ``M`` as a finite, non-empty 2-D array and return it as complex128."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise LinalgError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise LinalgError(f"{name} must have at least one row and column")
    M = M.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(M)):
        raise LinalgError(f"{name} contains NaN or Inf")
    return M


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(x).reshape((n, -1), order="F")


# ---------------------------------------------------------------------------
# Sparse graph shift
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseShift:
    """Square sparse graph shift stored as canonical (row, col, weight) triples.

    Triples are sorted by (row, col). Duplicate coordinates, out-of-range
    indices, zero and non-finite weights are rejected.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise LinalgError(f"n must be >= 1, got {self.n}")
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        weights = np.asarray(self.weights).ravel()
        if not (rows.shape == cols.shape == weights.shape):
            raise LinalgError("rows, cols and weights must have equal length")
        if rows.size:
            if rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n:
                raise LinalgError(f"index out of range for n={n}")
            if not np.all(np.isfinite(weights)):
                raise LinalgError("weights must be finite")
            if np.any(weights == 0):
                raise LinalgError("weights must be nonzero")
        if np.iscomplexobj(weights):
            weights = weights.astype(np.complex128)
        else:
            weights = weights.astype(np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, weights = rows[order], cols[order], weights[order]
        if rows.size > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if np.any(dup):
                k = int(np.flatnonzero(dup)[0])
                raise LinalgError(f"duplicate entry at ({rows[k]}, {cols[k]})")
        for arr in (rows, cols, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_triples(cls, n: int, triples) -> "SparseShift":
        triples = list(triples)
        if not triples:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        r, c, w = zip(*triples)
        return cls(n, np.array(r), np.array(c), np.array(w))

    @classmethod
    def from_dense(cls, A) -> "SparseShift":
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise LinalgError(f"graph shift must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise LinalgError("graph shift contains NaN or Inf")
        r, c = np.nonzero(A)
        w = A[r, c]
        if np.iscomplexobj(w) and np.all(w.imag == 0):
            w = w.real
        return cls(A.shape[0], r, c, w)

    @classmethod
    def from_scipy(cls, M) -> "SparseShift":
        M = sp.coo_matrix(M)
        if M.shape[0] != M.shape[1]:
            raise LinalgError(f"graph shift must be square, got shape {M.shape}")
        M.sum_duplicates()
        keep = M.data != 0
        return cls(M.shape[0], M.row[keep], M.col[keep], M.data[keep])

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.weights)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights.astype(np.complex128), (self.rows, self.cols)),
            shape=(self.n, self.n),
        )

    @cached_property
    def csr_adjoint(self) -> sp.csr_matrix:
        return self.csr.conj().T.tocsr()

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.complex128)
        A[self.rows, self.cols] = self.weights
        return A

    def conj_transpose(self) -> "SparseShift":
        return SparseShift(self.n, self.cols, self.rows, np.conj(self.weights))

    def is_hermitian(self) -> bool:
        return self == self.conj_transpose()

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.weights))

    def triples(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def __eq__(self, other):
        if not isinstance(other, SparseShift):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseShift(n={self.n}, nnz={self.nnz})"


def _as_shift(A) -> SparseShift:
    if isinstance(A, SparseShift):
        return A
    if sp.issparse(A):
        return SparseShift.from_scipy(A)
    return SparseShift.from_dense(A)


# ---------------------------------------------------------------------------
# Complex Schur decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SchurPair:
    """``A = U T U^H`` with ``U`` unitary and ``T`` upper triangular."""

    U: np.ndarray
    T: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.T).copy()


def schur(A, unitarity_tol: float = UNITARITY_TOL,
          reconstruction_tol: float = RECONSTRUCTION_TOL) -> SchurPair:
    """Complex Schur form of ``A``.

    Always complex, even for real input: the SGFA contraction step needs an
    exactly triangular factor, which a real quasi-triangular form does not
    give.  Entries below the diagonal of ``T`` are stored as exact zeros.
    """
    if isinstance(A, SparseShift):
        dense = A.to_dense()
    else:
        dense = as_complex_matrix(A, "A")
    n = dense.shape[0]
    if dense.shape != (n, n):
        raise LinalgError(f"A must be square, got shape {dense.shape}")
    if not np.all(np.isfinite(dense)):
        raise LinalgError("A contains NaN or Inf")
    try:
        T, U = sla.schur(dense, output="complex")
    except (sla.LinAlgError, ValueError) as exc:
        raise SchurError(f"complex Schur factorization did not converge: {exc}") from exc
    T = np.triu(T)
    U = np.ascontiguousarray(U, dtype=np.complex128)
    T = np.ascontiguousarray(T, dtype=np.complex128)

    unit_err = np.linalg.norm(U.conj().T @ U - np.eye(n))
    if unit_err > n * unitarity_tol:
        raise SchurError(f"Schur factor not unitary: ||U^H U - I||_F = {unit_err:.3e}")
    norm_a = np.linalg.norm(dense)
    rec_err = np.linalg.norm(dense - U @ T @ U.conj().T)
    if rec_err > reconstruction_tol * norm_a and rec_err > 0:
        raise SchurError(
            f"Schur reconstruction error {rec_err:.3e} exceeds "
            f"{reconstruction_tol:g} * ||A||_F = {reconstruction_tol * norm_a:.3e}"
        )
    for M in (U, T):
        M.setflags(write=False)
    return SchurPair(U, T)


# ---------------------------------------------------------------------------
# Sylvester operator  f = vec(F)  ->  vec(A F - F T)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SylvesterOperator:
    """Matrix-free ``I (x) A - T^T (x) I`` acting on column-stacked ``n x n`` matrices."""

    A: SparseShift
    T: np.ndarray

    def __post_init__(self):
        A = _as_shift(self.A)
        T = as_complex_matrix(self.T, "T")
        if T.shape != (A.n, A.n):
            raise LinalgError(f"T must be {A.n}x{A.n}, got {T.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "T", T)

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n * self.n, self.n * self.n)

    @cached_property
    def _TH(self) -> np.ndarray:
        return np.ascontiguousarray(self.T.conj().T)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 1 or x.size != self.n * self.n:
            raise LinalgError(f"expected a vector of length {self.n ** 2}, got shape {x.shape}")
        return x

    def matvec(self, x) -> np.ndarray:
        X = unvec(self._check(x), self.n)
        return vec(self.A.csr @ X - X @ self.T)

    def rmatvec(self, x) -> np.ndarray:
        X = unvec(self._check(x), self.n)
        return vec(self.A.csr_adjoint @ X - X @ self._TH)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Matrix form: ``A X - X T``."""
        return self.A.csr @ X - X @ self.T

    def norm_bound(self) -> float:
        """Cheap upper bound on the operator 2-norm."""
        return self.A.frobenius() + float(np.linalg.norm(self.T))

    def to_dense(self) -> np.ndarray:
        """Explicit ``n^2 x n^2`` Kronecker matrix (small ``n`` only)."""
        eye = np.eye(self.n)
        return np.kron(eye, self.A.to_dense()) - np.kron(self.T.T, eye)

    def as_linear_operator(self):
        from scipy.sparse.linalg import LinearOperator

        return LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.rmatvec,
                              dtype=np.complex128)


def apply_operator(op: SylvesterOperator, x) -> np.ndarray:
    return op.matvec(x)


def apply_adjoint(op: SylvesterOperator, x) -> np.ndarray:
    return op.rmatvec(x)


# ---------------------------------------------------------------------------
# LSQR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LsqrSettings:
    max_iters: int = 100
    atol: float = 1e-10
    btol: float = 1e-10
    conlim: float = 1e12

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise LinalgError(f"max_iters must be >= 1, got {self.max_iters}")
        for name in ("atol", "btol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise LinalgError(f"{name} must be in (0, 1), got {v}")
        if not self.conlim > 1:
            raise LinalgError(f"conlim must be > 1, got {self.conlim}")


LSQR_REASONS = {
    0: "zero_rhs",
    1: "consistent",
    2: "least_squares",
    3: "condition_limit",
    4: "consistent_eps",
    5: "least_squares_eps",
    6: "condition_eps",
    7: "max_iters",
    8: "dense",
}


@dataclass(frozen=True)
class InnerSolveStats:
    """Outcome of one projection solve."""

    iterations: int
    residual_norm: float
    istop: int
    rhs_norm: float
    solution_norm: float
    residual_estimates: tuple = ()
    anorm: float = float("nan")
    acond: float = float("nan")
    seconds: float = 0.0

    @property
    def reason(self) -> str:
        return LSQR_REASONS.get(self.istop, "unknown")

    @property
    def hit_max_iters(self) -> bool:
        return self.istop == 7

    @property
    def seconds_per_iteration(self) -> float:
        return self.seconds / self.iterations if self.iterations else 0.0


def lsqr_min_norm(op: SylvesterOperator, b, settings: LsqrSettings | None = None):
    """Minimum-norm least-squares solve of ``op x = b`` by LSQR.

    Starting from ``x = 0`` keeps every iterate in the range of the adjoint, so
    for a consistent system the iterates approach the minimum-norm solution.
    Returns ``(x, InnerSolveStats)``; running out of iterations is reported in
    the stats, not raised.
    """
    settings = settings or LsqrSettings()
    if not isinstance(settings, LsqrSettings):
        raise LinalgError("settings must be an LsqrSettings instance")
    b = op._check(b).astype(np.complex128)
    start = time.perf_counter()
    atol, btol = settings.atol, settings.btol
    ctol = 1.0 / settings.conlim

    x = np.zeros(b.size, dtype=np.complex128)
    u = b.copy()
    bnorm = beta = float(np.linalg.norm(u))
    if beta == 0:
        return x, InnerSolveStats(0, 0.0, 0, 0.0, 0.0, (0.0,), 0.0, 0.0,
                                  time.perf_counter() - start)
    u /= beta
    v = op.rmatvec(u)
    alpha = float(np.linalg.norm(v))
    if alpha > 0:
        v /= alpha
    w = v.copy()

    rhobar, phibar = alpha, beta
    anorm = acond = ddnorm = xxnorm = z = sn2 = 0.0
    cs2 = -1.0
    xnorm = 0.0
    estimates = [beta]
    istop = 0
    itn = 0
    if alpha * beta == 0:
        # b is orthogonal to the range: x = 0 is already the least-squares solution
        istop = 2
    while istop == 0:
        itn += 1
        u = op.matvec(v) - alpha * u
        beta = float(np.linalg.norm(u))
        if beta > 0:
            u /= beta
            anorm = float(np.sqrt(anorm ** 2 + alpha ** 2 + beta ** 2))
            v = op.rmatvec(u) - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0:
                v /= alpha

        rho = float(np.hypot(rhobar, beta))
        cs, sn = rhobar / rho, beta / rho
        theta = sn * alpha
        rhobar = -cs * alpha
        phi = cs * phibar
        phibar = sn * phibar
        tau = sn * phi

        dk = w / rho
        x += (phi / rho) * w
        w = v - (theta / rho) * w
        ddnorm += float(np.vdot(dk, dk).real)

        delta = sn2 * rho
        gambar = -cs2 * rho
        rhs = phi - delta * z
        zbar = rhs / gambar
        xnorm = float(np.sqrt(xxnorm + zbar ** 2))
        gamma = float(np.hypot(gambar, theta))
        cs2, sn2 = gambar / gamma, theta / gamma
        z = rhs / gamma
        xxnorm += z ** 2

        acond = anorm * np.sqrt(ddnorm)
        rnorm = abs(phibar)
        estimates.append(rnorm)
        arnorm = alpha * abs(tau)

        test1 = rnorm / bnorm
        test2 = arnorm / (anorm * rnorm) if rnorm > 0 else 0.0
        test3 = 1.0 / acond if acond > 0 else np.inf
        t1 = test1 / (1 + anorm * xnorm / bnorm)
        rtol = btol + atol * anorm * xnorm / bnorm

        if itn >= settings.max_iters:
            istop = 7
        if 1 + test3 <= 1:
            istop = 6
        if 1 + test2 <= 1:
            istop = 5
        if 1 + t1 <= 1:
            istop = 4
        if test3 <= ctol:
            istop = 3
        if test2 <= atol:
            istop = 2
        if test1 <= rtol:
            istop = 1

    residual = float(np.linalg.norm(op.matvec(x) - b))
    stats = InnerSolveStats(
        iterations=itn,
        residual_norm=residual,
        istop=istop,
        rhs_norm=bnorm,
        solution_norm=float(np.linalg.norm(x)),
        residual_estimates=tuple(estimates),
        anorm=anorm,
        acond=float(acond),
        seconds=time.perf_counter() - start,
    )
    return x, stats


def dense_min_norm(op: SylvesterOperator, b, rcond: float | None = None):
    """Minimum-norm solve through the explicit Kronecker matrix (SVD based).

    Cross-check path for small graphs; cost is O(n^6).  Singular values below
    ``rcond * sigma_max`` (default ``n**2 * eps``) are treated as zero.
    """
    b = op._check(b).astype(np.complex128)
    start = time.perf_counter()
    M = op.to_dense()
    if rcond is None:
        rcond = M.shape[0] * np.finfo(float).eps
    x, *_ = sla.lstsq(M, b, cond=rcond, lapack_driver="gelsd")
    residual = float(np.linalg.norm(M @ x - b))
    bnorm = float(np.linalg.norm(b))
    return x, InnerSolveStats(0, residual, 8, bnorm, float(np.linalg.norm(x)),
                              seconds=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Norms, singular values, inverse
# ---------------------------------------------------------------------------


def singular_extremes(M) -> tuple[float, float]:
    """(sigma_min, sigma_max) of ``M`` from a full SVD."""
    M = as_complex_matrix(M)
    s = sla.svdvals(M)
    return float(s[-1]), float(s[0])


def frobenius(M) -> float:
    return float(np.linalg.norm(as_complex_matrix(M)))


def spectral_norm(M) -> float:
    return float(sla.svdvals(as_complex_matrix(M))[0])


def invert(M, rtol: float | None = None, which: str | None = None) -> np.ndarray:
    """Inverse via LU with partial pivoting.

    A pivot with magnitude at or below ``rtol * max|pivot|`` (default
    ``n * eps``) raises :class:`SingularMatrixError`.
    """
    M = as_complex_matrix(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise LinalgError(f"cannot invert non-square matrix of shape {M.shape}")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if rtol is None:
        rtol = n * np.finfo(float).eps
    k = int(np.argmin(pivots))
    if pivots[k] == 0 or pivots[k] <= rtol * pivots.max():
        raise SingularMatrixError(pivots[k], k, which)
    return sla.lu_solve((lu, piv), np.eye(n, dtype=np.complex128), check_finite=False)
