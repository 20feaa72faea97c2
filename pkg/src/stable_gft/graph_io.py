"""Graph ingestion and synthetic shifts.

Readers return :class:`~stable_gft.linalg.SparseShift` with 0-based indices.
Random graphs use numpy's Philox generator (a counter-based 64-bit PRNG), so a
``(n, p, self_loops, seed)`` spec produces the same matrix on every platform.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import SparseShift

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "GraphFormatError",
    "load_matrix_market",
    "save_matrix_market",
    "load_edge_list",
    "save_edge_list",
    "load_graph",
    "RandomGraphSpec",
    "erdos_renyi",
    "jordan_block",
    "directed_cycle",
    "DatasetDescriptor",
    "load_descriptor",
    "builtin_descriptor",
    "load_dataset",
    "sha256_file",
]


class GraphFormatError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


# ---------------------------------------------------------------------------
# Matrix Market (coordinate)
# ---------------------------------------------------------------------------

_MM_FIELDS = ("real", "integer", "complex", "pattern")
_MM_SYMMETRY = ("general", "symmetric", "skew-symmetric", "hermitian")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def load_matrix_market(path) -> SparseShift:
    """Read a square Matrix Market coordinate file.

    Symmetric, skew-symmetric and Hermitian files are expanded to both
    triangles.  Explicit zero entries are dropped.
    """
    path = Path(path)
    with path.open("r") as fh:
        lines = iter(enumerate(fh, start=1))
        try:
            lineno, banner = next(lines)
        except StopIteration:
            raise GraphFormatError("empty file", path) from None
        tokens = banner.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket" or tokens[1] != "matrix":
            raise GraphFormatError("missing '%%MatrixMarket matrix' banner", path, lineno)
        fmt, fld, sym = tokens[2:]
        if fmt != "coordinate":
            raise GraphFormatError(f"only coordinate format is supported, got {fmt!r}", path, lineno)
        if fld not in _MM_FIELDS:
            raise GraphFormatError(f"unsupported field {fld!r}", path, lineno)
        if sym not in _MM_SYMMETRY:
            raise GraphFormatError(f"unsupported symmetry {sym!r}", path, lineno)

        size = None
        for lineno, line in lines:
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            size = (lineno, s.split())
            break
        if size is None:
            raise GraphFormatError("missing size line", path)
        lineno, parts = size
        try:
            nrows, ncols, nnz = (int(p) for p in parts)
        except ValueError:
            raise GraphFormatError(f"malformed size line {' '.join(parts)!r}", path, lineno) from None
        if nrows != ncols:
            raise GraphFormatError(f"graph shift must be square, got {nrows}x{ncols}", path, lineno)
        if nrows < 1 or nnz < 0:
            raise GraphFormatError("invalid dimensions", path, lineno)

        want = {"pattern": 2, "complex": 4}.get(fld, 3)
        entries: dict = {}
        seen = 0
        for lineno, line in lines:
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if len(parts) != want:
                raise GraphFormatError(f"expected {want} fields, got {len(parts)}", path, lineno)
            try:
                i, j = int(parts[0]) - 1, int(parts[1]) - 1
                if fld == "pattern":
                    w = 1.0
                elif fld == "complex":
                    w = complex(float(parts[2]), float(parts[3]))
                elif fld == "integer":
                    w = float(int(parts[2]))
                else:
                    w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"malformed entry {s!r}", path, lineno) from None
            if not (0 <= i < nrows and 0 <= j < nrows):
                raise GraphFormatError(f"index ({i + 1}, {j + 1}) out of range", path, lineno)
            if sym != "general" and j > i:
                raise GraphFormatError(
                    f"{sym} file stores the lower triangle only, got ({i + 1}, {j + 1})", path, lineno)
            if sym == "skew-symmetric" and i == j:
                raise GraphFormatError("skew-symmetric file has a diagonal entry", path, lineno)
            if not np.isfinite(w):
                raise GraphFormatError("non-finite weight", path, lineno)
            seen += 1
            if (i, j) in entries:
                raise GraphFormatError(f"duplicate entry ({i + 1}, {j + 1})", path, lineno)
            entries[(i, j)] = w
            if i != j:
                if sym == "symmetric":
                    entries[(j, i)] = w
                elif sym == "skew-symmetric":
                    entries[(j, i)] = -w
                elif sym == "hermitian":
                    entries[(j, i)] = complex(w).conjugate()
        if seen != nnz:
            raise GraphFormatError(f"header declares {nnz} entries, found {seen}", path)

    triples = [(i, j, w) for (i, j), w in entries.items() if w != 0]
    return SparseShift.from_triples(nrows, triples)


def save_matrix_market(A: SparseShift, path, comment: str | None = None) -> None:
    """Write ``A`` as a general coordinate file (17 significant digits)."""
    path = Path(path)
    fld = "complex" if A.is_complex else "real"
    with path.open("w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {fld} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n} {A.n} {A.nnz}\n")
        for i, j, w in zip(A.rows, A.cols, A.weights):
            if fld == "complex":
                fh.write(f"{i + 1} {j + 1} {_fmt(w.real)} {_fmt(w.imag)}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {_fmt(w)}\n")


# ---------------------------------------------------------------------------
# Edge lists:  "src dst [w [w_imag]]", 0-based, '#' comments
# ---------------------------------------------------------------------------


def load_edge_list(path, weighted: bool = True, n: int | None = None) -> SparseShift:
    """Read one directed edge per line.

    Blank lines and anything after ``#`` are ignored.  Weights default to 1;
    with ``weighted=False`` any weight column is an error.  A header comment
    ``# nodes: N`` fixes the node count (isolated trailing nodes); otherwise
    ``n`` or ``max index + 1`` is used.
    """
    path = Path(path)
    edges: dict = {}
    header_n = None
    with path.open("r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            body, _, comment = raw.partition("#")
            c = comment.strip().lower()
            if c.startswith("nodes:"):
                try:
                    header_n = int(c.split(":", 1)[1])
                except ValueError:
                    raise GraphFormatError("malformed '# nodes:' header", path, lineno) from None
            parts = body.split()
            if not parts:
                continue
            if len(parts) not in (2, 3, 4) or (not weighted and len(parts) != 2):
                raise GraphFormatError(f"malformed edge line {body.strip()!r}", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
                w = 1.0
                if len(parts) == 3:
                    w = float(parts[2])
                elif len(parts) == 4:
                    w = complex(float(parts[2]), float(parts[3]))
            except ValueError:
                raise GraphFormatError(f"malformed edge line {body.strip()!r}", path, lineno) from None
            if i < 0 or j < 0:
                raise GraphFormatError(f"negative node index in {body.strip()!r}", path, lineno)
            if not np.isfinite(w) or w == 0:
                raise GraphFormatError("edge weight must be finite and nonzero", path, lineno)
            if (i, j) in edges:
                raise GraphFormatError(f"duplicate edge ({i}, {j})", path, lineno)
            edges[(i, j)] = w
    size = n if n is not None else header_n
    top = max((max(i, j) for i, j in edges), default=-1) + 1
    if size is None:
        size = max(top, 1)
    elif top > size:
        raise GraphFormatError(f"node index {top - 1} out of range for n={size}", path)
    return SparseShift.from_triples(size, [(i, j, w) for (i, j), w in edges.items()])


def save_edge_list(A: SparseShift, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# nodes: {A.n}\n")
        for i, j, w in zip(A.rows, A.cols, A.weights):
            if A.is_complex:
                fh.write(f"{i} {j} {_fmt(w.real)} {_fmt(w.imag)}\n")
            else:
                fh.write(f"{i} {j} {_fmt(w)}\n")


def load_graph(path, fmt: str | None = None) -> SparseShift:
    """Dispatch on ``fmt`` ('mm' or 'edges'), or on the file extension."""
    path = Path(path)
    if fmt is None:
        fmt = "mm" if path.suffix.lower() in (".mtx", ".mm") else "edges"
    if fmt == "mm":
        return load_matrix_market(path)
    if fmt == "edges":
        return load_edge_list(path)
    raise ValueError(f"unknown graph format {fmt!r}")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomGraphSpec:
    n: int
    p: float
    self_loops: bool = False
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def for_trial(self, trial: int) -> "RandomGraphSpec":
        return RandomGraphSpec(self.n, self.p, self.self_loops, (int(self.seed) + trial) % 2 ** 64)


def erdos_renyi(spec: RandomGraphSpec) -> SparseShift:
    """Directed Erdos-Renyi shift with unit weights.

    Row ``i`` draws ``n`` uniforms from ``Generator(Philox(seed))`` in order;
    ``(i, j)`` is an edge iff the ``j``-th draw is below ``p``.  Without self
    loops the diagonal draw is still consumed but discarded, so the two
    variants share the off-diagonal pattern for equal seeds.
    """
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    rows, cols = [], []
    for i in range(spec.n):
        hit = np.flatnonzero(rng.random(spec.n) < spec.p)
        if not spec.self_loops:
            hit = hit[hit != i]
        rows.append(np.full(hit.size, i, dtype=np.int64))
        cols.append(hit)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return SparseShift(spec.n, r, c, np.ones(r.size))


def jordan_block(n: int) -> SparseShift:
    """Nilpotent ``n x n`` Jordan block: ones on the superdiagonal."""
    if n == 1:
        return SparseShift(1, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    idx = np.arange(n - 1)
    return SparseShift(n, idx, idx + 1, np.ones(n - 1))


def directed_cycle(n: int) -> SparseShift:
    """Cyclic shift ``A[i, (i+1) % n] = 1``; eigenvalues are the ``n``-th roots of unity."""
    idx = np.arange(n)
    return SparseShift(n, idx, (idx + 1) % n, np.ones(n))


# ---------------------------------------------------------------------------
# Dataset descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    expected_n: int
    expected_nnz: int
    format: str = "mm"
    sha256: str | None = None
    notes: str = ""

    @classmethod
    def from_mapping(cls, d: dict) -> "DatasetDescriptor":
        return cls(
            name=str(d["name"]),
            expected_n=int(d["expected_n"]),
            expected_nnz=int(d["expected_nnz"]),
            format=str(d.get("format", "mm")),
            sha256=d.get("sha256") or None,
            notes=str(d.get("notes", "")),
        )


def load_descriptor(path) -> DatasetDescriptor:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    else:
        data = json.loads(path.read_text())
    return DatasetDescriptor.from_mapping(data)


def builtin_descriptor(name: str) -> DatasetDescriptor:
    here = Path(__file__).parent / "datasets" / f"{name}.json"
    if not here.exists():
        raise KeyError(f"no built-in descriptor named {name!r}")
    return load_descriptor(here)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_dataset(path, descriptor: DatasetDescriptor) -> SparseShift:
    """Load a user-supplied dataset file and cross-check it against ``descriptor``."""
    if descriptor.sha256:
        digest = sha256_file(path)
        if digest != descriptor.sha256:
            raise GraphFormatError(
                f"sha256 mismatch for {descriptor.name}: {digest} != {descriptor.sha256}", path)
    A = load_graph(path, descriptor.format)
    if A.n != descriptor.expected_n or A.nnz != descriptor.expected_nnz:
        raise GraphFormatError(
            f"{descriptor.name}: expected n={descriptor.expected_n}, nnz={descriptor.expected_nnz}; "
            f"got n={A.n}, nnz={A.nnz}", path)
    return A


def dataset_path_from_env(name: str) -> Path | None:
    """Path from ``STABLE_GFT_<NAME>`` if it points at an existing file."""
    value = os.environ.get(f"STABLE_GFT_{name.upper()}")
    if value and Path(value).is_file():
        return Path(value)
    return None
