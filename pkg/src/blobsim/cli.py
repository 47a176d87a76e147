"""Command line front end: run, sweep, fit, preset."""
from __future__ import annotations

import argparse
import csv
import sys

from .config import RunConfig, apply_overrides, dump_config, load_config
from .harness import run, sweep
from .observables import fit_power_law, write_fit_reports
from .presets import PRESET_NAMES, preset, resolve


def _add_common(p):
    p.add_argument("--config", help="config file (key = value sections)")
    p.add_argument("--experiment", choices=PRESET_NAMES, help="experiment preset")
    p.add_argument("--n", type=int, help="particle count (steady-state or initial)")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--out", help="output directory")


def _base_config(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.experiment:
        cfg = preset(args.experiment)
    else:
        raise SystemExit("either --config or --experiment is required")
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="blobsim",
        description="Meshfree blob-particle simulator for driven mass diffusion "
        "with density and flux boundary conditions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one simulation")
    _add_common(p_run)
    p_run.add_argument("--snapshot-every", type=int, dest="snapshot_every",
                       help="write a particle snapshot every K steps (0 = never)")
    p_run.add_argument("--total-time", type=float, dest="total_time", help="override run length")
    p_run.add_argument("--force-model", dest="force_model",
                       choices=("log_density", "variational"), help="entropic force model")

    p_sweep = sub.add_parser("sweep", help="convergence sweep over particle counts")
    _add_common(p_sweep)
    p_sweep.add_argument("--n-values", dest="n_values",
                         help="comma-separated particle counts (at least 4)")

    p_fit = sub.add_parser("fit", help="power-law fit of sweep summary columns")
    p_fit.add_argument("--input", required=True, help="sweep_summary.csv (needs an m_p column)")
    p_fit.add_argument("--quantity", action="append",
                       help="column to fit (repeatable; default: every data column)")
    p_fit.add_argument("--out", help="write fit_report.csv here (default: print)")

    p_pre = sub.add_parser("preset", help="inspect an experiment preset")
    p_pre.add_argument("--show", action="store_true", help="print the fully resolved config")
    p_pre.add_argument("--experiment", choices=PRESET_NAMES, required=True)
    p_pre.add_argument("--n", type=int)

    args = parser.parse_args(argv)
    return {"run": _cmd_run, "sweep": _cmd_sweep, "fit": _cmd_fit, "preset": _cmd_preset}[args.command](args)


def _cmd_run(args):
    cfg = _base_config(args)
    apply_overrides(
        cfg,
        experiment=args.experiment,
        n=args.n,
        seed=args.seed,
        out=args.out,
        snapshot_every=args.snapshot_every,
        total_time=args.total_time,
        force_model=args.force_model,
    )
    out_dir = cfg.output_dir()
    res = run(cfg, out_dir=out_dir)
    s = res.series
    print(
        f"{cfg.experiment} n={cfg.n} steps={res.plan.params.n_steps}: "
        f"final mass inside {s.mass_inside[-1]:.6g}, total particles {s.n_total[-1]}, "
        f"outputs in {out_dir}"
    )
    return 0


def _cmd_sweep(args):
    cfg = _base_config(args)
    apply_overrides(cfg, experiment=args.experiment, seed=args.seed, out=args.out)
    if args.n_values:
        cfg.sweep_n = [int(v) for v in args.n_values.replace(",", " ").split()]
    out_dir = cfg.output_dir()
    res = sweep(cfg, out_dir=out_dir)
    for f in res.fits:
        print(f"{f.quantity}: Q_inf={f.q_inf:.6g} a={f.a:.6g} alpha={f.alpha:.4f} residual={f.residual:.3g}")
    print(f"outputs in {out_dir}")
    return 0


def _cmd_fit(args):
    with open(args.input, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "m_p" not in rows[0]:
        raise SystemExit("fit input needs an m_p column")
    masses = [float(r["m_p"]) for r in rows]
    quantities = args.quantity or [c for c in rows[0] if c not in ("n", "m_p")]
    reports = []
    for q in quantities:
        reports.append(fit_power_law(masses, [float(r[q]) for r in rows], q))
    if args.out:
        write_fit_reports(args.out, reports)
        print(f"wrote {args.out}")
    else:
        for f in reports:
            flag = "" if f.identifiable else " (unidentifiable)"
            print(f"{f.quantity}: Q_inf={f.q_inf:.8g} a={f.a:.8g} alpha={f.alpha:.6f}{flag}")
    return 0


def _cmd_preset(args):
    cfg = preset(args.experiment, n=args.n)
    plan = resolve(cfg)
    if args.show:
        sys.stdout.write(dump_config(plan.resolved_config()))
    else:
        p = plan.params
        print(
            f"{args.experiment}: n={cfg.n} spacing={p.spacing:.8g} beta={p.beta:.8g} "
            f"layer_depth={p.layer_depth:.6g} dt={p.dt:.6g} steps={p.n_steps}"
        )
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
