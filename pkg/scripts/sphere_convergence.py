#!/usr/bin/env python3
"""Dirichlet sphere study: absorption into an initially empty unit ball.

Runs a doubling sweep of steady-state particle counts, writes per-run
artifacts plus the power-law fit of the time-norm errors.  The full
five-level sweep is an overnight job; the default four desk levels finish
in well under an hour.
"""
import argparse

from blobsim.harness import sweep
from blobsim.presets import preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=4, help="number of doublings of 1600")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/sphere_convergence")
    args = ap.parse_args()

    cfg = preset("sphere", seed=args.seed)
    cfg.sweep_n = [1600 * 2**h for h in range(args.levels)]
    res = sweep(cfg, out_dir=args.out)
    for p in res.points:
        print(f"n={p.n:6d}  m={p.mass:.3e}  l1_mass={p.l1_mass:.6f}  "
              f"l1_inertia={p.l1_inertia:.6f}  steady_n_t={p.n_total_final:.0f}")
    for f in res.fits:
        print(f"{f.quantity}: asymptote={f.q_inf:.6f}  amplitude={f.a:.4g}  "
              f"exponent={f.alpha:.3f}")


if __name__ == "__main__":
    main()
