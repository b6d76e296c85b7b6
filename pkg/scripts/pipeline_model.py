"""Two-stage pipeline model over the unroll factor, with op-count and timed stage costs."""

import argparse
from pathlib import Path

from tfhe_bku.analysis import calibrate_op_costs, op_count_costs, unroll_sweep, write_report
from tfhe_bku.params import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default=None)
    ap.add_argument("--beta", type=int, default=64)
    ap.add_argument("--timed", action="store_true", help="also calibrate from kernel timings on this machine")
    ap.add_argument("--out", default="results/pipeline.csv")
    args = ap.parse_args()
    params = load_preset(args.preset)
    tables = [op_count_costs(params, args.beta)]
    if args.timed:
        tables.append(calibrate_op_costs(params, args.beta))
    rows = []
    for costs in tables:
        sweep = unroll_sweep(costs, params)
        best = max(sweep, key=lambda r: r["throughput"])["m"]
        print(f"{costs.source}: best m = {best}")
        for r in sweep:
            speedup = r["sequential"] / r["pipelined"]
            print(f"  m={r['m']}  t_B={r['t_bundle']:10.1f}  t_E={r['t_ep']:10.1f}  pipelining x{speedup:.2f}")
            rows.append({"costs": costs.source, **r})
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_report(args.out, rows, params)


if __name__ == "__main__":
    main()
