#!/usr/bin/env python3
"""Box filling study: one end face held at fixed density, five barrier walls.

Sweeps the steady particle count from 400 upward (doubling), fits the
power laws of the time-norm errors of total mass and polar inertia.
"""
import argparse

from blobsim.harness import sweep
from blobsim.presets import preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=4, help="number of doublings of 400")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/box_convergence")
    args = ap.parse_args()

    cfg = preset("box", seed=args.seed)
    cfg.sweep_n = [400 * 2**h for h in range(args.levels)]
    res = sweep(cfg, out_dir=args.out)
    for p in res.points:
        print(f"n={p.n:6d}  m={p.mass:.4g}  l1_mass={p.l1_mass:.2f}  "
              f"steady_mass={p.steady_mass_inside:.1f}  steady_inertia={p.steady_inertia_inside:.1f}")
    for f in res.fits:
        print(f"{f.quantity}: asymptote={f.q_inf:.2f}  exponent={f.alpha:.3f}")


if __name__ == "__main__":
    main()
