"""Run orchestration: the outer time loop, output files, and sweeps.

One step is exactly: advect, source, rebuild the cell grid, diffuse, then
the boundary correctors (density patches first, then flux patches, each in
patch-id order).  Observables are recorded after every full step; all RNG
derives from the run seed via spawned streams (one per patch), so a fixed
config and seed reproduces outputs byte for byte.
"""
from __future__ import annotations

import csv
import logging
import os
import platform
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .blobs import CellGrid, ParticleSet, write_snapshot
from .boundary import dirichlet_correct, neumann_correct
from .config import RunConfig, dump_config
from .geometry import DIRICHLET
from .observables import TimeSeries, fit_power_law, mass_inside, polar_inertia, steady_mean, write_fit_reports
from .presets import RunPlan, resolve
from .stepper import SourceAccumulator, advect_step, diffusion_step, source_step

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    plan: RunPlan
    series: TimeSeries
    particles: ParticleSet
    corrector_records: list
    step_stats: dict
    out_dir: str | None


def _ordered_bcs(bcs):
    return sorted(bcs, key=lambda bc: (bc.kind != DIRICHLET, bc.patch.pid))


def run(plan_or_cfg, out_dir=None, hook=None, velocity=None, source=None):
    """Execute one simulation; returns the in-memory result.

    ``hook(phase, step, particles)`` fires after each phase for
    instrumentation; it must not mutate the particle set.
    """
    if isinstance(plan_or_cfg, RunConfig):
        plan = resolve(plan_or_cfg, velocity=velocity, source=source)
    else:
        plan = plan_or_cfg
    cfg = plan.config
    params = plan.params
    kernel = params.kernel()
    dt = params.dt
    n_steps = params.n_steps

    children = np.random.SeedSequence(params.seed).spawn(2 + len(plan.patches))
    rng_fill = np.random.default_rng(children[0])
    rng_source = np.random.default_rng(children[1])
    patch_rngs = {p.pid: np.random.default_rng(children[2 + p.pid]) for p in plan.patches}

    ps = ParticleSet(params.mass_per_particle)
    if cfg.initial_fill == "uniform":
        ps.insert(plan.dom.sample_inside(cfg.n, rng_fill), 0.0)

    bounds = plan.confining_dom.bbox(pad=kernel.cutoff_radius)
    ordered = _ordered_bcs(plan.bcs)
    series = TimeSeries(params.mass_per_particle)
    records = []
    acc = SourceAccumulator()
    stats = {"max_displacement": [], "max_entropic_speed": [], "max_penetration": []}

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    def record(step, t):
        inside = plan.dom.contains(ps.pos) if ps.n else np.zeros(0, dtype=bool)
        n_in = int(np.count_nonzero(inside))
        series.append(
            step,
            t,
            ps.n,
            n_in,
            polar_inertia(ps, plan.center, dom=plan.dom),
            polar_inertia(ps, plan.center),
        )
        if hook is not None:
            hook("record", step, ps)

    def snapshot(step, t):
        if out_dir is not None and cfg.snapshot_every and step % cfg.snapshot_every == 0:
            write_snapshot(os.path.join(out_dir, f"snapshot_{step}.csv"), ps, t)

    record(0, 0.0)
    snapshot(0, 0.0)
    for k in range(n_steps):
        t = k * dt
        t_next = (k + 1) * dt
        advect_step(ps, plan.velocity, t, dt)
        if hook is not None:
            hook("advect", k + 1, ps)
        source_step(ps, plan.source, t, dt, rng_source, kernel, acc)
        if hook is not None:
            hook("source", k + 1, ps)
        grid = CellGrid(ps.pos, kernel.cutoff_radius, bounds)
        info = diffusion_step(
            ps, kernel, params.diffusivity, dt, plan.confining_dom,
            params.penalty_stiffness, grid=grid, model=params.force_model,
        )
        stats["max_displacement"].append(info["max_displacement"])
        stats["max_entropic_speed"].append(info["max_entropic_speed"])
        stats["max_penetration"].append(
            float(plan.confining_dom.dist(ps.pos).max()) if ps.n else 0.0
        )
        if hook is not None:
            hook("diffuse", k + 1, ps)
        for bc in ordered:
            if bc.kind == DIRICHLET:
                rec = dirichlet_correct(
                    ps, bc, t_next, patch_rngs[bc.patch.pid],
                    density_ceiling=cfg.density_ceiling, step=k + 1,
                )
            else:
                rec = neumann_correct(
                    ps, bc, t, t_next, patch_rngs[bc.patch.pid],
                    starvation_limit=cfg.starvation_limit, step=k + 1,
                )
            records.append(rec)
            if hook is not None:
                hook(f"correct:{bc.patch.pid}", k + 1, ps)
        record(k + 1, t_next)
        snapshot(k + 1, t_next)

    result = RunResult(plan, series, ps, records, stats, out_dir)
    if out_dir is not None:
        _write_outputs(result)
    return result


def _write_outputs(result):
    out = result.out_dir
    result.series.write_csv(os.path.join(out, "timeseries.csv"))
    if result.plan.config.corrector_log and result.corrector_records:
        with open(os.path.join(out, "corrector_log.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "patch_id", "kind", "target_count", "actual_count", "inserted", "removed"])
            for r in result.corrector_records:
                w.writerow([r.step, r.patch_id, r.kind, r.target_count, r.actual_count, r.inserted, r.removed])
    with open(os.path.join(out, "run_manifest.txt"), "w") as fh:
        fh.write(_manifest(result.plan))


def _manifest(plan):
    lines = [
        f"blobsim {__version__}",
        f"python {platform.python_version()}",
        f"numpy {np.__version__}",
        "workers 1",
        f"steps {plan.params.n_steps}",
        f"seed {plan.params.seed}",
        "",
        dump_config(plan.resolved_config()),
    ]
    return "\n".join(lines)


@dataclass
class SweepPoint:
    n: int
    mass: float
    l1_mass: float
    l1_inertia: float
    steady_mass_inside: float
    steady_inertia_inside: float
    n_total_final: float


@dataclass
class SweepResult:
    points: list
    fits: list
    out_dir: str | None


def sweep(cfg, out_dir=None, velocity=None, source=None):
    """Run every count in cfg.sweep_n and fit the time-norm power laws.

    Each point runs with seed cfg.seed + its index and writes its own
    artifacts under ``<out>/n<count>``.  Partial summaries survive a failed
    point: whatever completed is written before the error propagates.
    """
    ns = list(cfg.sweep_n)
    if len(ns) < 4:
        raise ValueError("a sweep needs at least 4 particle counts")
    points = []
    try:
        for i, n in enumerate(ns):
            sub = replace(cfg, n=int(n), seed=cfg.seed + i, sweep_n=[])
            sub_out = os.path.join(out_dir, f"n{n}") if out_dir else None
            res = run(sub, out_dir=sub_out, velocity=velocity, source=source)
            s = res.series
            points.append(
                SweepPoint(
                    n=int(n),
                    mass=res.plan.params.mass_per_particle,
                    l1_mass=s.l1("mass_total"),
                    l1_inertia=s.l1("j_all"),
                    steady_mass_inside=steady_mean(s.times, s.mass_inside),
                    steady_inertia_inside=steady_mean(s.times, np.asarray(s.j_inside)),
                    n_total_final=steady_mean(s.times, np.asarray(s.n_total, dtype=float)),
                )
            )
    finally:
        if out_dir is not None and points:
            os.makedirs(out_dir, exist_ok=True)
            _write_sweep_summary(os.path.join(out_dir, "sweep_summary.csv"), points)

    m = [p.mass for p in points]
    fits = [
        fit_power_law(m, [p.l1_mass for p in points], "l1_mass"),
        fit_power_law(m, [p.l1_inertia for p in points], "l1_inertia"),
    ]
    if out_dir is not None:
        write_fit_reports(os.path.join(out_dir, "fit_report.csv"), fits)
    return SweepResult(points, fits, out_dir)


def _write_sweep_summary(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "m_p", "l1_mass", "l1_inertia", "steady_mass_inside",
                    "steady_inertia_inside", "n_total_final"])
        for p in points:
            w.writerow([p.n, _fmt(p.mass), _fmt(p.l1_mass), _fmt(p.l1_inertia),
                        _fmt(p.steady_mass_inside), _fmt(p.steady_inertia_inside),
                        _fmt(p.n_total_final)])


def _fmt(v):
    return format(float(v), ".17e")
