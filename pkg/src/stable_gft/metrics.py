"""Accuracy and stability diagnostics for an approximate Fourier basis."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .linalg import SingularMatrixError, _as_shift, as_complex_matrix, invert, singular_extremes

__all__ = [
    "accuracy",
    "residual_matrix",
    "ComponentErrors",
    "component_errors",
    "condition_number",
    "inverse_error",
    "angle",
    "eigenpair_angles",
    "lr_discrepancy",
    "align_eigenvalues",
    "MetricsReport",
    "metrics_report",
    "DEFAULT_BIN_EDGES",
]

DEFAULT_BIN_EDGES = tuple(10.0 ** np.arange(-16, 1))
ANGLE_ZERO_TOL = 1e-12


def _shapes(A, F, Lambda):
    A = _as_shift(A)
    F = as_complex_matrix(F, "F")
    lam = np.asarray(Lambda, dtype=np.complex128)
    if lam.ndim == 2:
        lam = np.diag(lam)
    if F.shape != (A.n, A.n) or lam.shape != (A.n,):
        raise ValueError(
            f"shape mismatch: A is {A.n}x{A.n}, F is {F.shape}, Lambda has {lam.shape}"
        )
    return A, F, lam


def residual_matrix(A, F, Lambda) -> np.ndarray:
    """``A F - F Lambda``; column ``i`` is ``A f_i - lambda_i f_i``."""
    A, F, lam = _shapes(A, F, Lambda)
    return A.csr @ F - F * lam[None, :]


def accuracy(A, F, Lambda) -> float:
    return float(np.linalg.norm(residual_matrix(A, F, Lambda)))


@dataclass(frozen=True)
class ComponentErrors:
    """Distribution of ``|(A f_i - lambda_i f_i)_j| / n`` over all ``n**2`` entries.

    ``counts[0]`` holds values below ``edges[0]`` and ``counts[-1]`` values at or
    above ``edges[-1]``; the remaining bins are ``[edges[m-1], edges[m])``.
    """

    edges: tuple
    counts: tuple
    total: int
    max: float
    quantiles: dict
    values: np.ndarray = field(repr=False, compare=False)

    def fraction_below(self, threshold: float) -> float:
        return float(np.count_nonzero(self.values < threshold)) / self.total

    def fraction_at_least(self, threshold: float) -> float:
        return float(np.count_nonzero(self.values >= threshold)) / self.total


def component_errors(A, F, Lambda, bin_edges=DEFAULT_BIN_EDGES,
                     quantiles=(0.5, 0.75, 0.9, 0.99, 0.9999)) -> ComponentErrors:
    R = residual_matrix(A, F, Lambda)
    n = R.shape[0]
    values = (np.abs(R) / n).ravel()
    edges = np.asarray(bin_edges, dtype=float)
    idx = np.searchsorted(edges, values, side="right")
    counts = np.bincount(idx, minlength=edges.size + 1)
    qs = {float(q): float(np.quantile(values, q)) for q in quantiles}
    return ComponentErrors(
        edges=tuple(edges.tolist()),
        counts=tuple(int(c) for c in counts),
        total=int(values.size),
        max=float(values.max()),
        quantiles=qs,
        values=values,
    )


def condition_number(F) -> float:
    """``||F||_2 / sigma_min(F)``; ``inf`` for a singular ``F``."""
    smin, smax = singular_extremes(F)
    return smax / smin if smin > 0 else math.inf


def inverse_error(F, Finv=None, batch: bool = False) -> float:
    """``max(||F F^-1 - I||_F, ||F^-1 F - I||_F)``.

    A singular ``F`` raises :class:`SingularMatrixError`, or returns ``inf``
    when ``batch`` is set.
    """
    F = as_complex_matrix(F, "F")
    if Finv is None:
        try:
            Finv = invert(F, which="F")
        except SingularMatrixError:
            if batch:
                return math.inf
            raise
    eye = np.eye(F.shape[0])
    return float(max(np.linalg.norm(F @ Finv - eye), np.linalg.norm(Finv @ F - eye)))


def angle(x, y) -> float | None:
    """Angle in degrees between complex vectors viewed as vectors of ``R^{2n}``.

    Returns ``None`` if either vector is zero.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    y = np.asarray(y, dtype=np.complex128).ravel()
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return None
    # 2 atan2(|u - v|, |u + v|) for unit u, v equals arccos(Re<u, v>) but
    # keeps full precision near 0 and 180 degrees
    u, v = x / nx, y / ny
    return math.degrees(2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def eigenpair_angles(A, F, Lambda, literal: bool = False,
                     zero_tol: float = ANGLE_ZERO_TOL) -> list:
    """``angle(A f_i, lambda_i f_i)`` per column.

    Columns where ``||lambda_i f_i|| < zero_tol * ||f_i||`` come back as
    ``None``: for eigenvalues near zero the formula degenerates to ~90 degrees
    regardless of the eigenvector quality.  ``literal=True`` keeps the raw
    formula for every nonzero pair.
    """
    A, F, lam = _shapes(A, F, Lambda)
    AF = A.csr @ F
    out = []
    for i in range(A.n):
        lf = lam[i] * F[:, i]
        if not literal and np.linalg.norm(lf) < zero_tol * np.linalg.norm(F[:, i]):
            out.append(None)
        else:
            out.append(angle(AF[:, i], lf))
    return out


def align_eigenvalues(lam_right, lam_left) -> np.ndarray:
    """Permutation ``p`` pairing ``lam_right[i]`` with ``conj(lam_left[p[i]])``.

    Greedy nearest match in index order; among equally close candidates the
    lowest index wins, so identical spectra map to the identity.
    """
    lr = np.asarray(lam_right, dtype=np.complex128)
    ll = np.conj(np.asarray(lam_left, dtype=np.complex128))
    if lr.shape != ll.shape:
        raise ValueError("eigenvalue lists differ in length")
    free = np.ones(ll.size, dtype=bool)
    perm = np.empty(ll.size, dtype=np.int64)
    for i, v in enumerate(lr):
        d = np.abs(ll - v)
        d[~free] = np.inf
        j = int(np.argmin(d))
        perm[i] = j
        free[j] = False
    return perm


def lr_discrepancy(F_right, W_left) -> dict:
    """Consistency of a right basis ``F`` with a left basis ``W``.

    Returns ``||F - (W^H)^-1||_F``, ``||W - (F^H)^-1||_F`` and their mean.  The
    columns of ``W`` must already be matched to those of ``F``.
    """
    F = as_complex_matrix(F_right, "F_right")
    W = as_complex_matrix(W_left, "W_left")
    if F.shape != W.shape:
        raise ValueError(f"shape mismatch: {F.shape} vs {W.shape}")
    WH_inv = invert(W.conj().T, which="W_left^H")
    FH_inv = invert(F.conj().T, which="F_right^H")
    right = float(np.linalg.norm(F - WH_inv))
    left = float(np.linalg.norm(W - FH_inv))
    return {"right": right, "left": left, "mean": 0.5 * (right + left)}


@dataclass(frozen=True)
class MetricsReport:
    """Flat diagnostic summary; field order is the CSV/JSON column order."""

    n: int
    accuracy: float
    sigma_min: float
    sigma_max: float
    condition: float
    inverse_error: float
    component_max: float
    component_frac_below_1e7: float
    component_frac_ge_1e6: float
    angles_defined: int
    angles_below_10deg: int
    angle_median_deg: float
    component_hist: tuple = ()

    FIELDS = (
        "n", "accuracy", "sigma_min", "sigma_max", "condition", "inverse_error",
        "component_max", "component_frac_below_1e7", "component_frac_ge_1e6",
        "angles_defined", "angles_below_10deg", "angle_median_deg",
    )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["component_hist"] = list(self.component_hist)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=True)

    def csv_row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.FIELDS)
        writer.writerow([repr(v) if isinstance(v, float) else v for v in self.csv_row()])
        return buf.getvalue()


def metrics_report(A, F, Lambda, bin_edges=DEFAULT_BIN_EDGES) -> MetricsReport:
    A, F, lam = _shapes(A, F, Lambda)
    smin, smax = singular_extremes(F)
    ce = component_errors(A, F, lam, bin_edges)
    angs = [a for a in eigenpair_angles(A, F, lam) if a is not None]
    return MetricsReport(
        n=A.n,
        accuracy=accuracy(A, F, lam),
        sigma_min=smin,
        sigma_max=smax,
        condition=smax / smin if smin > 0 else math.inf,
        inverse_error=inverse_error(F, batch=True),
        component_max=ce.max,
        component_frac_below_1e7=ce.fraction_below(1e-7),
        component_frac_ge_1e6=ce.fraction_at_least(1e-6),
        angles_defined=len(angs),
        angles_below_10deg=sum(a < 10 for a in angs),
        angle_median_deg=float(np.median(angs)) if angs else math.nan,
        component_hist=tuple(zip(ce.edges + (math.inf,), ce.counts)),
    )
