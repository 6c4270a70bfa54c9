#!/usr/bin/env python3
"""Reduced-scale fidelity table from simulated depolarizing runs.

Drives the benchmark subcommand over a noise-rate grid at one system size
and prints the resulting three-row-per-rate table (unitary-evolution score,
cross-entropy score, and the analytic reference fidelity).
"""

import argparse
import json
import os
import sys

from hsbench.cli import main as hsbench_main


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=5, help="system qubits")
    parser.add_argument("--t", type=float, default=2.0)
    parser.add_argument("--degrees", type=int, nargs="+", default=[6, 10, 20])
    parser.add_argument(
        "--r2", type=float, nargs="+", default=[4e-5, 2.2e-4, 4e-4],
        help="two-qubit depolarizing rates (one-qubit rate is a tenth)",
    )
    parser.add_argument("--instances", type=int, default=50)
    parser.add_argument("--shots", type=int, default=100_000)
    parser.add_argument("--coupling", default="linear")
    parser.add_argument("--depth", type=int, default=100)
    parser.add_argument("--tol", type=float, default=2e-2)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default="runs/fidelity")
    parser.add_argument("--threads", type=int, default=1)
    return parser.parse_args()


def run():
    args = parse_args()
    os.makedirs(args.out, exist_ok=True)
    config = {
        "n": args.n,
        "t": args.t,
        "degrees": args.degrees,
        "r2_values": args.r2,
        "instances": args.instances,
        "shots": args.shots,
        "coupling": args.coupling,
        "depth": args.depth,
        "tol": args.tol,
        "seed": args.seed,
    }
    config_path = os.path.join(args.out, "config.json")
    with open(config_path, "w") as fh:
        json.dump(config, fh, indent=2)
    code = hsbench_main(
        ["benchmark", "--config", config_path, "--out", args.out,
         "--threads", str(args.threads)]
    )
    if code != 0:
        return code
    print()
    with open(os.path.join(args.out, "fidelity_table.csv")) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            cells = line.strip().split(",")
            print("  ".join(f"{c:>10.10s}" for c in cells))
    return 0


if __name__ == "__main__":
    sys.exit(run())
