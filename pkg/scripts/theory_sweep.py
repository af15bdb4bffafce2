#!/usr/bin/env python3
"""Sweep the correlation matrices over a (p, w) grid and tabulate definiteness.

Prints, per matrix, how many grid points are numerically negative semidefinite
and the worst relative top eigenvalue; ``--json`` dumps every record.
"""
import argparse
import json
from dataclasses import asdict

import numpy as np

from qgrf.theory import DEFINITE_RTOL, proven_regime, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-p", type=int, default=10)
    ap.add_argument("--n-w", type=int, default=20)
    ap.add_argument("--n-lambdas", type=int, default=10)
    ap.add_argument("--delta", type=float, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args()

    lam = np.random.default_rng(args.seed).uniform(-1, 1, args.n_lambdas)
    lam /= np.abs(lam).max()
    ps = np.linspace(0.5 / args.n_p, 0.5, args.n_p)
    ws = np.geomspace(0.01, 0.9, args.n_w)
    records = sweep(ps, ws, lam, args.delta)

    print(f"{'matrix':8}{'nsd/all':>12}{'nsd/proven':>14}{'worst rel':>12}")
    for name in sorted({r.matrix for r in records}, key=["C", "D", "D_delta", "E", "F", "J"].index):
        rs = [r for r in records if r.matrix == name]
        proven = [r for r in rs if proven_regime(name, r.p, r.w)]
        ok = sum(r.verdict == "nsd" for r in rs)
        ok_p = sum(r.verdict == "nsd" for r in proven)
        # tolerance = rtol * ||M||_F, so lambda_max / tolerance * rtol is relative to the norm
        worst = max((r.lambda_max / r.tolerance * DEFINITE_RTOL if r.tolerance > 0 else 0.0) for r in rs)
        print(f"{name:8}{f'{ok}/{len(rs)}':>12}{f'{ok_p}/{len(proven)}':>14}{worst:>12.2e}")

    if args.json:
        with open(args.json, "w") as fh:
            json.dump([asdict(r) for r in records], fh, indent=2)


if __name__ == "__main__":
    main()
