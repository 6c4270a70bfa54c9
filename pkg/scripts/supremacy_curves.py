#!/usr/bin/env python3
"""Threshold-fidelity curves and the optimal-time Monte-Carlo check.

For each requested system size, runs the supremacy subcommand (semi-analytic
curve over simulation time) and prints the extracted threshold and optimal
times.  Optionally follows up with a topt-mc run at a small size to compare
the sampled zero-string probability against the Bessel-function prediction.
"""

import argparse
import json
import os
import sys

from hsbench.cli import main as hsbench_main


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[6, 12])
    parser.add_argument("--mc-n", type=int, default=6,
                        help="system size for the Monte-Carlo follow-up (0 skips it)")
    parser.add_argument("--mc-samples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default="runs/supremacy")
    return parser.parse_args()


def run():
    args = parse_args()
    for n in args.n:
        out_dir = os.path.join(args.out, f"n{n}")
        os.makedirs(out_dir, exist_ok=True)
        config_path = os.path.join(out_dir, "config.json")
        with open(config_path, "w") as fh:
            json.dump({"n": n, "seed": args.seed}, fh, indent=2)
        code = hsbench_main(["supremacy", "--config", config_path, "--out", out_dir])
        if code != 0:
            return code
        with open(os.path.join(out_dir, "supremacy_report.json")) as fh:
            report = json.load(fh)
        print(
            f"n={n}: t_thr={report['t_threshold']}, t_opt={report['t_optimal']}, "
            f"gamma(t_opt)={report['gamma_at_optimal']}, "
            f"bessel={report['bessel_prediction']}"
        )
    if args.mc_n > 0:
        out_dir = os.path.join(args.out, f"mc_n{args.mc_n}")
        os.makedirs(out_dir, exist_ok=True)
        config_path = os.path.join(out_dir, "config.json")
        with open(config_path, "w") as fh:
            json.dump(
                {"n": args.mc_n, "samples": args.mc_samples, "seed": args.seed},
                fh,
                indent=2,
            )
        code = hsbench_main(["topt-mc", "--config", config_path, "--out", out_dir])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
