#!/usr/bin/env python3
"""Approximation error of solved phase sets across polynomial degrees.

Solves one phase set per degree at a fixed simulation time and prints the
certified sup-norm errors as a table.  The tolerance is set far below what
any practical degree reaches, so every solve runs to the bottom of its
budget and the table shows the best error each degree can certify.  Phase
files are written next to the table for reuse by the ques and benchmark
subcommands (or a device run).
"""

import argparse
import os
import sys

from hsbench import qsp
from hsbench.linalg import RandomSource


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--degrees", type=int, nargs="+", default=[6, 8, 10, 14, 20])
    parser.add_argument("--tol", type=float, default=1e-13)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default="runs/phases")
    return parser.parse_args()


def best_effort_solve(t, degree, tol, rng):
    try:
        return qsp.solve_phases(t, degree, tol, rng)
    except qsp.PhaseSolverDidNotConverge as exc:
        return exc.best


def run():
    args = parse_args()
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for degree in args.degrees:
        seq = best_effort_solve(args.t, degree, args.tol, RandomSource(args.seed))
        path = os.path.join(args.out, f"phases_t{args.t:g}_d{degree}.json")
        qsp.write_phase_file(path, qsp.convert_convention(seq, qsp.CIRCUIT))
        rows.append((degree, seq.sup_error))
        print(f"degree {degree}: sup error {seq.sup_error:.3e} -> {path}")
    print(f"\nt = {args.t:g}")
    print(f"{'degree':>8s} {'sup error':>12s}")
    for degree, eps in rows:
        print(f"{degree:8d} {eps:12.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
