"""Accuracy vs stability along the SGFA path on nilpotent Jordan blocks."""

import argparse
from pathlib import Path

from stable_gft.cli import write_csv
from stable_gft.experiments import jordan_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[3, 5, 10])
    ap.add_argument("--beta", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--k-max", type=int, default=20)
    ap.add_argument("--out", default="results/jordan")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in args.n:
        for beta in args.beta:
            for r in jordan_check(n, beta, args.k_max):
                rows.append({"n": n, "beta": beta, **r})
    write_csv(out / "jordan_tradeoff.csv", rows, "jordan_tradeoff")
    worst = max(r["max_entry_error"] for r in rows)
    print(f"{len(rows)} iterates, worst deviation from closed form {worst:.2e}")


if __name__ == "__main__":
    main()
