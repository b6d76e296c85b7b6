"""Relative product error (dB) of the integer transform per twiddle bitwidth."""

import argparse
from pathlib import Path

from tfhe_bku.analysis import error_sweep, write_report
from tfhe_bku.transform.error import DEFAULT_BETAS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--trials", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/error_sweep.csv")
    args = ap.parse_args()
    rows = error_sweep(DEFAULT_BETAS, args.N, args.trials, args.seed)
    for r in rows:
        print(f"beta={r['beta']!s:>9}  {r['error_db']:8.2f} dB")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_report(args.out, rows, seed=args.seed, N=args.N, trials=args.trials)


if __name__ == "__main__":
    main()
