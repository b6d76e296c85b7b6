"""Bootstrapped output noise per unroll factor, split into rounding, transform and key parts."""

import argparse
from pathlib import Path

from tfhe_bku.analysis import noise_scan, write_report
from tfhe_bku.params import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default=None)
    ap.add_argument("--m-values", default="1,2,3,4,5")
    ap.add_argument("--trials", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/noise_scan.csv")
    args = ap.parse_args()
    params = load_preset(args.preset)
    ms = [int(t) for t in args.m_values.split(",")]
    reports = noise_scan(ms, args.trials, params, args.seed)
    print(f"{'m':>2} {'keys':>5} {'EPs':>5} {'rounding':>10} {'transform':>10} {'key noise':>10} {'stddev':>9}")
    for r in reports:
        print(
            f"{r.unroll_factor:>2} {r.bk_key_count:>5} {r.external_products_per_bootstrap:>5} "
            f"{r.rounding_noise_var:10.3e} {r.transform_noise_var:10.3e} {r.ep_noise_var:10.3e} "
            f"{r.measured_output_phase_stddev:9.2e}"
        )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_report(args.out, reports, params, args.seed)


if __name__ == "__main__":
    main()
