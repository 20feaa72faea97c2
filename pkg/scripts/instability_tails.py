"""Empirical P[sigma_min(F_eig) <= threshold] over directed ER graphs."""

import argparse
from pathlib import Path

from stable_gft.cli import write_csv
from stable_gft.experiments import DEFAULT_P_GRID, instability_tails


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--threshold", type=float, default=1e-12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/tails")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = instability_tails(args.n, DEFAULT_P_GRID, args.trials, args.threshold, args.seed)
    write_csv(out / "tails.csv", rows, "tails")
    for r in rows:
        print(f"self_loops={r['self_loops']} p={r['p']:.2f} P={r['probability']:.2f}")


if __name__ == "__main__":
    main()
