"""Graph Fourier transform on a computed basis and total-variation ordering."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import SparseShift, _as_shift, as_complex_matrix, invert

__all__ = [
    "SpectralBasis",
    "gft",
    "gft_inverse",
    "total_variation",
    "total_variations",
    "order_by_tv",
    "tv_rank",
    "frequency_bands",
    "write_signal_csv",
    "read_signal_csv",
    "write_dump",
    "read_dump",
    "write_tv_csv",
    "DUMP_MAGIC",
]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """A basis ``F`` with eigenvalues ``Lambda`` and its cached inverse (the GFT matrix)."""

    F: np.ndarray
    Lambda: np.ndarray
    F_inv: np.ndarray
    inverse_error: float
    lambda_max_mag: float
    tv_order: np.ndarray | None = None

    @classmethod
    def build(cls, F, Lambda, A=None) -> "SpectralBasis":
        """Invert ``F`` once; with the shift ``A`` also fix the TV ordering."""
        F = as_complex_matrix(F, "F")
        lam = np.asarray(Lambda, dtype=np.complex128).ravel()
        if F.shape != (lam.size, lam.size):
            raise ValueError(f"F is {F.shape} but Lambda has {lam.size} entries")
        F_inv = invert(F, which="F")
        eye = np.eye(lam.size)
        err = float(max(np.linalg.norm(F @ F_inv - eye), np.linalg.norm(F_inv @ F - eye)))
        basis = cls(F, lam, F_inv, err, float(np.abs(lam).max()))
        if A is not None:
            object.__setattr__(basis, "tv_order", order_by_tv(basis, A))
        return basis

    @classmethod
    def from_result(cls, result, A=None) -> "SpectralBasis":
        return cls.build(result.F, result.Lambda, A)

    @property
    def n(self) -> int:
        return self.F.shape[0]


def _signal(basis: SpectralBasis, s) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    if s.shape[0] != basis.n:
        raise ValueError(f"signal length {s.shape[0]} does not match n = {basis.n}")
    return s


def gft(basis: SpectralBasis, s) -> np.ndarray:
    """Analysis: spectral coefficients ``F^-1 s``.  Accepts a vector or an ``n x m`` batch."""
    return basis.F_inv @ _signal(basis, s)


def gft_inverse(basis: SpectralBasis, s_hat) -> np.ndarray:
    """Synthesis: ``F s_hat = sum_i s_hat[i] f_i``."""
    return basis.F @ _signal(basis, s_hat)


def _a_norm_scale(basis: SpectralBasis) -> float:
    if basis.lambda_max_mag == 0:
        raise ValueError("total variation undefined: all eigenvalues are zero")
    return 1.0 / basis.lambda_max_mag


def total_variation(basis: SpectralBasis, A, f) -> float:
    """``||f - A f / |lambda_max| ||_1`` with the complex modulus per entry."""
    A = _as_shift(A)
    scale = _a_norm_scale(basis)
    f = np.asarray(f, dtype=np.complex128)
    return float(np.abs(f - scale * (A.csr @ f)).sum())


def total_variations(basis: SpectralBasis, A) -> np.ndarray:
    """TV of every column of ``basis.F``."""
    A = _as_shift(A)
    scale = _a_norm_scale(basis)
    F = basis.F
    return np.abs(F - scale * (A.csr @ F)).sum(axis=0)


TV_TIE_RTOL = 1e-10


def tv_rank(tv, tie_rtol: float = TV_TIE_RTOL) -> np.ndarray:
    """Permutation sorting ``tv`` ascending.

    Values within ``tie_rtol * max(tv)`` of the first member of their run
    count as tied and keep column order, so roundoff cannot reorder
    analytically equal variations.
    """
    tv = np.asarray(tv, dtype=float)
    order = np.argsort(tv, kind="stable")
    tol = tie_rtol * (float(tv.max()) if tv.size else 0.0)
    out, start = [], 0
    for i in range(1, order.size + 1):
        if i == order.size or tv[order[i]] - tv[order[start]] > tol:
            out.extend(sorted(order[start:i].tolist()))
            start = i
    return np.asarray(out, dtype=np.int64)


def order_by_tv(basis: SpectralBasis, A, tie_rtol: float = TV_TIE_RTOL) -> np.ndarray:
    """Column permutation by non-decreasing TV; see :func:`tv_rank` for ties."""
    return tv_rank(total_variations(basis, A), tie_rtol)


def frequency_bands(tv_sorted, cutoffs=(1 / 3, 2 / 3)) -> list:
    """Label sorted TV values 'low' / 'medium' / 'high'.

    ``cutoffs`` are fractions of the TV range ``[min, max]``; the default
    splits it in thirds.
    """
    tv = np.asarray(tv_sorted, dtype=float)
    lo_c, hi_c = cutoffs
    if not 0 <= lo_c <= hi_c <= 1:
        raise ValueError("cutoffs must satisfy 0 <= low <= high <= 1")
    lo, hi = tv.min(), tv.max()
    b1 = lo + lo_c * (hi - lo)
    b2 = lo + hi_c * (hi - lo)
    return ["low" if v <= b1 else "medium" if v <= b2 else "high" for v in tv]


# ---------------------------------------------------------------------------
# Signal and matrix files
# ---------------------------------------------------------------------------


def write_signal_csv(path, s, header: str | None = None) -> None:
    """CSV with columns ``index, real, imag``."""
    s = np.asarray(s, dtype=np.complex128).ravel()
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "real", "imag"])
        for i, v in enumerate(s):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path) -> np.ndarray:
    values = {}
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        for row in csv.DictReader(rows):
            values[int(row["index"])] = complex(float(row["real"]), float(row["imag"]))
    if sorted(values) != list(range(len(values))):
        raise ValueError(f"{path}: signal indices must be 0..n-1 without gaps")
    return np.array([values[i] for i in range(len(values))], dtype=np.complex128)


# 16-byte header: magic (4s) | rows n (uint64) | dtype tag (uint32); little endian.
# Payload is column-major; the column count follows from the payload size.
DUMP_MAGIC = b"SGFT"
_HEADER = struct.Struct("<4sQI")
_DTYPES = {1: np.dtype("<c16"), 2: np.dtype("<f8")}


def write_dump(path, M) -> None:
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    tag = 1 if np.iscomplexobj(M) else 2
    data = np.asarray(M, dtype=_DTYPES[tag])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DUMP_MAGIC, data.shape[0], tag))
        fh.write(data.tobytes(order="F"))


def read_dump(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, tag = _HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if tag not in _DTYPES:
        raise ValueError(f"{path}: unknown dtype tag {tag}")
    dtype = _DTYPES[tag]
    payload = raw[_HEADER.size:]
    if n == 0 or len(payload) % (n * dtype.itemsize):
        raise ValueError(f"{path}: payload size does not match {n} rows")
    cols = len(payload) // (n * dtype.itemsize)
    return np.frombuffer(payload, dtype=dtype).reshape((n, cols), order="F").copy()


def write_tv_csv(path, tv, order, schema: str | None = None) -> None:
    """``rank, column, tv, band`` in increasing TV order."""
    tv = np.asarray(tv)
    ranked = tv[order]
    bands = frequency_bands(ranked)
    with open(path, "w", newline="") as fh:
        if schema:
            fh.write(f"# schema: {schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "column", "tv", "band"])
        for rank, (col, val, band) in enumerate(zip(order, ranked, bands)):
            w.writerow([rank, int(col), repr(float(val)), band])
