#!/usr/bin/env python3
"""Sweep random-circuit depth against the Haar references.

Runs the haar-convergence subcommand once per requested qubit count and
prints, per coupling map, the smallest depth whose normalized entropy and
first five moments all sit within the requested band around 1.  The CSV
artifacts land in one subdirectory per qubit count.
"""

import argparse
import csv
import json
import os
import sys

from hsbench.cli import main as hsbench_main


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, nargs="+", default=[5, 6])
    parser.add_argument(
        "--couplings", nargs="+", default=None,
        help="coupling styles (default: linear, grid if one fits, full)",
    )
    parser.add_argument(
        "--depths", type=int, nargs="+",
        default=[10, 20, 40, 60, 80, 100, 120, 140, 160],
    )
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--band", type=float, default=0.01,
                        help="convergence band around 1 for all statistics")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default="runs/haar")
    parser.add_argument("--threads", type=int, default=1)
    return parser.parse_args()


def default_couplings(qubits):
    styles = ["linear"]
    for rows in range(2, qubits):
        if qubits % rows == 0 and rows <= qubits // rows:
            styles.append(f"grid({rows},{qubits // rows})")
            break
    styles.append("full")
    return styles


def converged_depth(csv_path, coupling, band):
    best = None
    with open(csv_path, newline="") as fh:
        data = (line for line in fh if not line.startswith("#"))
        for cells in csv.reader(data):
            if not cells or cells[0] in ("", "coupling") or cells[0] != coupling:
                continue
            stats = [float(v) for v in cells[3:]]
            if all(abs(s - 1.0) <= band for s in stats):
                depth = int(cells[1])
                best = depth if best is None else min(best, depth)
    return best


def run():
    args = parse_args()
    for qubits in args.qubits:
        couplings = args.couplings or default_couplings(qubits)
        out_dir = os.path.join(args.out, f"m{qubits}")
        os.makedirs(out_dir, exist_ok=True)
        config = {
            "qubits": qubits,
            "couplings": couplings,
            "depths": sorted(args.depths),
            "instances": args.instances,
            "seed": args.seed,
        }
        config_path = os.path.join(out_dir, "config.json")
        with open(config_path, "w") as fh:
            json.dump(config, fh, indent=2)
        code = hsbench_main(
            ["haar-convergence", "--config", config_path, "--out", out_dir,
             "--threads", str(args.threads)]
        )
        if code != 0:
            return code
        csv_path = os.path.join(out_dir, "haar_convergence.csv")
        print(f"\n{qubits} qubits ({args.instances} instances, band {args.band:.1%}):")
        for coupling in couplings:
            depth = converged_depth(csv_path, coupling, args.band)
            verdict = f"converged at depth {depth}" if depth else "not converged in sweep"
            print(f"  {coupling:12s} {verdict}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
