"""``stable-gft`` command line interface.

Every subcommand writes its outputs under ``--out`` (default ``.``).  CSV files
start with a ``# schema: stable_gft.<kind>/v1`` line.  Failures print an error
JSON on stderr, also write it to ``<out>/error.json`` when possible, and exit
with status 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .graph_io import (
    RandomGraphSpec,
    directed_cycle,
    erdos_renyi,
    jordan_block,
    load_graph,
)
from .linalg import LsqrSettings, SparseShift
from .metrics import metrics_report
from .sgfa import SgfaConfig, sgfa_run, sgfa_run_left
from .spectral import read_dump, read_signal_csv, write_dump, write_signal_csv, write_tv_csv

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = "v1"
COMMANDS = ("decompose", "sweep-grid", "instability-tails", "left-right",
            "tv-order", "jordan-check", "epsilon-schur")

# Built-in defaults; a --config file overrides these, explicit flags override both.
DEFAULTS = {
    "input": None,
    "format": None,
    "generate": None,
    "n": 30,
    "p": 0.1,
    "self_loops": False,
    "seed": 0,
    "alpha": 1e-6,
    "beta": 0.5,
    "max_outer": 500,
    "offdiag_tol": 1e-12,
    "lsqr_iters": 100,
    "lsqr_tol": 1e-10,
    "inner_solver": "lsqr",
    "mode": "right",
    "trials": 100,
    "threshold": 1e-12,
    "p_grid": list(ex.DEFAULT_P_GRID),
    "alpha_grid": list(ex.DEFAULT_ALPHA_GRID),
    "beta_grid": list(ex.DEFAULT_BETA_GRID),
    "eps_grid": list(ex.DEFAULT_EPS_GRID),
    "k_max": 20,
    "ranks": [0, 1, 2, -3, -2, -1],
    "basis": None,
    "matrix_csv": True,
    "profile": False,
    "out": ".",
}


class CliError(Exception):
    pass


def _float_list(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("list must be non-empty")
    return vals


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stable-gft",
                                     description="Stable graph Fourier basis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS  # unset flags stay absent so config values survive
    g = common.add_argument_group("input graph")
    g.add_argument("--input", "-i", default=S, help="graph file")
    g.add_argument("--format", choices=("mm", "edges"), default=S)
    g.add_argument("--generate", choices=("er", "jordan", "cycle", "identity"), default=S)
    g.add_argument("--n", type=int, default=S)
    g.add_argument("--p", type=float, default=S)
    g.add_argument("--self-loops", action="store_true", default=S)
    g.add_argument("--seed", type=int, default=S)
    s = common.add_argument_group("SGFA")
    s.add_argument("--alpha", type=float, default=S)
    s.add_argument("--beta", type=float, default=S)
    s.add_argument("--max-outer", type=int, default=S)
    s.add_argument("--offdiag-tol", type=float, default=S)
    s.add_argument("--lsqr-iters", type=int, default=S)
    s.add_argument("--lsqr-tol", type=float, default=S)
    s.add_argument("--inner-solver", choices=("lsqr", "dense"), default=S)
    s.add_argument("--mode", choices=("right", "left"), default=S)
    o = common.add_argument_group("output")
    o.add_argument("--out", "-o", default=S, help="output directory")
    o.add_argument("--config", default=None, help="TOML or JSON file with flag values")
    o.add_argument("--profile", action="store_true", default=S,
                   help="write wall-clock time per LSQR iteration")

    sub.add_parser("decompose", parents=[common], help="run SGFA on one shift") \
        .add_argument("--no-matrix-csv", dest="matrix_csv", action="store_false", default=S)

    p = sub.add_parser("sweep-grid", parents=[common], help="SGFA over an (alpha, beta) grid")
    p.add_argument("--alpha-grid", type=_float_list, default=S)
    p.add_argument("--beta-grid", type=_float_list, default=S)

    p = sub.add_parser("instability-tails", parents=[common],
                       help="P[sigma_min(F_eig) <= threshold] over ER graphs")
    p.add_argument("--p-grid", type=_float_list, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--threshold", type=float, default=S)

    p = sub.add_parser("left-right", parents=[common], help="right vs left bases per alpha")
    p.add_argument("--alpha-grid", type=_float_list, default=S)

    p = sub.add_parser("tv-order", parents=[common], help="total-variation ordering")
    p.add_argument("--basis", default=S, help="directory written by 'decompose'")
    p.add_argument("--ranks", type=_int_list, default=S)

    p = sub.add_parser("jordan-check", parents=[common], help="SGFA vs closed forms")
    p.add_argument("--k-max", type=int, default=S)

    p = sub.add_parser("epsilon-schur", parents=[common], help="epsilon-scaled Schur sweep")
    p.add_argument("--eps-grid", type=_float_list, default=S)
    return parser


def load_config(path) -> dict:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    else:
        data = json.loads(path.read_text())
    if not isinstance(data, dict):
        raise CliError(f"{path}: config must be a table/object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise CliError(f"{path}: unknown config keys {sorted(unknown)}")
    return data


def resolve(argv=None, args=None) -> argparse.Namespace:
    """Parse ``argv`` and merge defaults, config file and flags (in that order)."""
    if args is None:
        args = build_parser().parse_args(argv)
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(load_config(args.config))
    merged.update({k: v for k, v in vars(args).items() if k != "config"})
    return argparse.Namespace(**merged)


def sgfa_config(ns) -> SgfaConfig:
    lsqr = LsqrSettings(max_iters=ns.lsqr_iters, atol=ns.lsqr_tol, btol=ns.lsqr_tol)
    return SgfaConfig(alpha=ns.alpha, beta=ns.beta, max_outer=ns.max_outer,
                      offdiag_tol=ns.offdiag_tol, lsqr=lsqr, inner_solver=ns.inner_solver)


def load_shift(ns) -> SparseShift:
    if ns.input and ns.generate:
        raise CliError("give either --input or --generate, not both")
    if ns.input:
        return load_graph(ns.input, ns.format)
    kind = ns.generate or "er"
    if kind == "er":
        return erdos_renyi(RandomGraphSpec(ns.n, ns.p, bool(ns.self_loops), ns.seed))
    if kind == "jordan":
        return jordan_block(ns.n)
    if kind == "cycle":
        return directed_cycle(ns.n)
    return SparseShift.from_dense(np.eye(ns.n))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_csv(path, rows, kind: str, fields=None) -> Path:
    path = Path(path)
    rows = list(rows)
    fields = fields or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: stable_gft.{kind}/{SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r.get(f, "")) for f in fields])
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
    return path


def write_matrix_csv(path, M, kind="matrix") -> Path:
    """Long format ``row, col, real, imag`` for every entry."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: stable_gft.{kind}/{SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "real", "imag"])
        for (i, j), v in np.ndenumerate(M):
            w.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_decompose(ns, out: Path) -> list:
    A = load_shift(ns)
    cfg = sgfa_config(ns)
    run = sgfa_run_left if ns.mode == "left" else sgfa_run
    t0 = time.perf_counter()
    res = run(A, cfg)
    elapsed = time.perf_counter() - t0
    shift = A.conj_transpose() if ns.mode == "left" else A
    report = metrics_report(shift, res.F, res.Lambda)

    written = [out / "F.bin"]
    write_dump(out / "F.bin", res.F)
    written.append(out / "lambda.csv")
    write_signal_csv(out / "lambda.csv", res.Lambda, header=f"schema: stable_gft.lambda/{SCHEMA_VERSION}")
    if ns.matrix_csv:
        written.append(write_matrix_csv(out / "F.csv", res.F))
    summary = report.to_dict()
    summary.update(mode=res.mode, termination=res.termination.value,
                   iterations=res.iterations_run, alpha=cfg.alpha, beta=cfg.beta,
                   seconds=elapsed)
    written.append(write_json(out / "metrics.json", summary))
    rows = [r.as_row() for r in res.history]
    written.append(write_csv(out / "history.csv", rows, "history"))
    if ns.profile:
        prof = []
        for r in res.history:
            if r.inner is not None:
                prof.append({"iteration": r.k, "inner_iterations": r.inner.iterations,
                             "seconds": r.inner.seconds,
                             "seconds_per_inner_iteration": r.inner.seconds_per_iteration})
        written.append(write_csv(out / "profile.csv", prof, "profile",
                                 ["iteration", "inner_iterations", "seconds",
                                  "seconds_per_inner_iteration"]))
    return written


def cmd_sweep_grid(ns, out: Path) -> list:
    A = load_shift(ns)
    rows = ex.sweep_grid(A, ns.alpha_grid, ns.beta_grid, sgfa_config(ns))
    written = [write_csv(out / "grid.csv", rows, "grid")]
    for key in ("accuracy", "sigma_min", "condition", "inverse_error"):
        mat = []
        for beta in ns.beta_grid:
            line = {"beta": beta}
            for r in rows:
                if r["beta"] == beta:
                    line[f"alpha={r['alpha']:g}"] = r[key]
            mat.append(line)
        written.append(write_csv(out / f"grid_{key}.csv", mat, f"grid_{key}"))
    viol = ex.row_monotonicity_violations(rows)
    written.append(write_json(out / "grid_checks.json", {
        "monotonicity_violations": [list(v) for v in viol],
        "fallback_cells": sum(r["fallback"] for r in rows),
    }))
    return written


def cmd_instability_tails(ns, out: Path) -> list:
    rows = ex.instability_tails(ns.n, ns.p_grid, ns.trials, ns.threshold, ns.seed)
    return [write_csv(out / "tails.csv", rows, "tails")]


def cmd_left_right(ns, out: Path) -> list:
    A = load_shift(ns)
    rows = ex.left_right(A, ns.alpha_grid, ns.beta, sgfa_config(ns))
    return [write_csv(out / "left_right.csv", rows, "left_right")]


def cmd_tv_order(ns, out: Path) -> list:
    A = load_shift(ns)
    if ns.basis:
        d = Path(ns.basis)
        F = read_dump(d / "F.bin")
        lam = read_signal_csv(d / "lambda.csv")
        if F.shape != (A.n, A.n):
            raise CliError(f"basis in {d} is {F.shape}, graph has n = {A.n}")
    else:
        res = sgfa_run(A, sgfa_config(ns))
        F, lam = res.F, res.Lambda
    basis, tv, order = ex.tv_data(A, F, lam)
    written = []
    tv_path = out / "tv.csv"
    write_tv_csv(tv_path, tv, order, schema=f"stable_gft.tv/{SCHEMA_VERSION}")
    written.append(tv_path)
    ranks = [r % basis.n for r in ns.ranks if -basis.n <= r < basis.n]
    mags = []
    for node in range(basis.n):
        row = {"node": node}
        for r in ranks:
            row[f"rank_{r}"] = float(abs(basis.F[node, order[r]]))
        mags.append(row)
    written.append(write_csv(out / "magnitudes.csv", mags, "magnitudes",
                             ["node"] + [f"rank_{r}" for r in ranks]))
    return written


def cmd_jordan_check(ns, out: Path) -> list:
    lsqr = LsqrSettings(max_iters=ns.lsqr_iters, atol=ns.lsqr_tol, btol=ns.lsqr_tol)
    rows = ex.jordan_check(ns.n, ns.beta, ns.k_max, ns.inner_solver, lsqr)
    return [write_csv(out / "jordan.csv", rows, "jordan")]


def cmd_epsilon_schur(ns, out: Path) -> list:
    A = load_shift(ns)
    rows = ex.epsilon_sweep(A, ns.eps_grid)
    return [write_csv(out / "epsilon.csv", rows, "epsilon")]


HANDLERS = {
    "decompose": cmd_decompose,
    "sweep-grid": cmd_sweep_grid,
    "instability-tails": cmd_instability_tails,
    "left-right": cmd_left_right,
    "tv-order": cmd_tv_order,
    "jordan-check": cmd_jordan_check,
    "epsilon-schur": cmd_epsilon_schur,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)  # usage errors exit with status 2
    ns = None
    try:
        ns = resolve(args=args)
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        written = HANDLERS[ns.command](ns, out)
        missing = [str(p) for p in written if not Path(p).is_file()]
        if missing:
            raise CliError(f"outputs not written: {missing}")
        for p in written:
            print(p)
        return 0
    except Exception as exc:  # surfaced as machine-readable JSON
        err = {
            "error": type(exc).__name__,
            "message": str(exc),
            "command": args.command,
        }
        for attr in ("iteration", "line", "path", "pivot", "index"):
            val = getattr(exc, attr, None)
            if val is not None:
                err[attr] = val if isinstance(val, (int, float, str)) else str(val)
        text = json.dumps(err, default=_json_default)
        print(text, file=sys.stderr)
        out_dir = getattr(ns, "out", None) or getattr(args, "out", DEFAULTS["out"])
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
        return 1


if __name__ == "__main__":
    sys.exit(main())
