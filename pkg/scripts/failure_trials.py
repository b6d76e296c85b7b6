"""Random NAND gates end to end; counts decryption failures per (beta, m)."""

import argparse
from pathlib import Path

from tfhe_bku.analysis import run_failure_trials, write_report
from tfhe_bku.params import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default=None)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--configs", default="64:2,38:2,8:2", help="beta:m pairs")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/failures.csv")
    args = ap.parse_args()
    params = load_preset(args.preset)
    reports = []
    for item in args.configs.split(","):
        beta, m = (int(t) for t in item.split(":"))
        rep = run_failure_trials(args.trials, beta, m, params, args.seed, threads=args.threads)
        print(f"beta={beta:2d} m={m}: {rep.failures}/{rep.trials} failures, {rep.gates_per_second:.1f} gates/s")
        reports.append(rep)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_report(args.out, reports, params, args.seed)


if __name__ == "__main__":
    main()
