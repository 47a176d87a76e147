"""Experiment presets and the rules deriving run parameters from a count.

Every preset fixes geometry, boundary data, and physical constants; the
particle count ``n`` then sets the mass per particle, the nominal spacing,
the kernel precision, the layer depth, and the stable time step:

* ``sphere`` -- unit ball, its whole surface held at the density that puts
  unit mass in the ball at steady state; starts empty.
* ``box``    -- 2 x 1 x 1 container, one square end face held at density
  500 (mass 1000 at steady state), five barrier-only walls; starts empty.
* ``pipe``   -- cylinder of length 2, radius 0.5; full inflow face
  (+5000 per area/time) and a central outflow disc of radius 0.25
  (-20000, so influx equals outflux); starts uniformly filled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry
from .boundary import BoundaryCondition
from .config import RunConfig
from .stepper import SimParams, check_tangency

SPHERE = {
    "radius": 1.0,
    "diffusivity": 1.0,
    "mass_steady": 1.0,
    "total_time": 15.0,
    "beta_prefactor": 2.0,
}
SPHERE["g"] = 3.0 * SPHERE["mass_steady"] / (4.0 * math.pi * SPHERE["radius"] ** 3)

BOX = {
    "length": 2.0,
    "breadth": 1.0,
    "rho_steady": 500.0,
    "diffusivity": 1.0,
    "total_time": 60.0,
    "beta_prefactor": 2.0,
}
BOX["mass_steady"] = BOX["rho_steady"] * BOX["length"] * BOX["breadth"] ** 2

PIPE = {
    "length": 2.0,
    "radius": 0.5,
    "outlet_radius": 0.25,
    "flux_in": 5000.0,
    "mass_initial": 1000.0,
    "diffusivity": 1.0,
    "total_time": 6.0,
    "beta_prefactor": 1.0,
}
PIPE["flux_out"] = PIPE["flux_in"] * PIPE["radius"] ** 2 / PIPE["outlet_radius"] ** 2

PRESET_NAMES = ("sphere", "box", "pipe")


def _derive_kwargs(experiment, n, total_time=None, seed=0):
    n = int(n)
    if n <= 0:
        raise ValueError("particle count must be positive")
    if experiment == "sphere":
        c = SPHERE
        mass = c["mass_steady"] / n
        spacing = c["radius"] * n ** (-1.0 / 3.0)
        depth = math.sqrt(c["radius"] * spacing)
    elif experiment == "box":
        c = BOX
        mass = c["mass_steady"] / n
        spacing = (3.0 * mass / (4.0 * math.pi * c["rho_steady"])) ** (1.0 / 3.0)
        depth = math.sqrt(c["length"] * spacing)
    elif experiment == "pipe":
        c = PIPE
        mass = c["mass_initial"] / n
        spacing = (0.75 * c["radius"] ** 2 * c["length"] / n) ** (1.0 / 3.0)
        depth = math.sqrt(c["radius"] * spacing)
    else:
        raise ValueError(f"unknown experiment preset {experiment!r}")
    return dict(
        diffusivity=c["diffusivity"],
        mass_per_particle=mass,
        spacing=spacing,
        total_time=c["total_time"] if total_time is None else total_time,
        beta_prefactor=c["beta_prefactor"],
        layer_depth=depth,
        seed=seed,
    )


def derive_params(experiment, n, total_time=None, seed=0, **overrides):
    """SimParams from a preset name and a particle count.

    sphere: spacing = R n^(-1/3), beta = 2/spacing^2, depth = sqrt(R spacing)
    box:    spacing = (3 m / (4 pi rho))^(1/3), beta = 2/spacing^2,
            depth = sqrt(L spacing)
    pipe:   spacing = (3/4 R^2 L / n)^(1/3), beta = 1/spacing^2,
            depth = sqrt(R spacing)
    In all cases dt = spacing^2 / diffusivity and the barrier stiffness
    defaults to 1/dt.
    """
    kw = _derive_kwargs(experiment, n, total_time=total_time, seed=seed)
    kw.update(overrides)
    return SimParams(**kw)


_DEFAULT_COUNTS = {"sphere": 1600, "box": 1600, "pipe": 1000}


def preset(name, n=None, **overrides):
    """RunConfig for a named experiment at its reference particle count."""
    if name not in _DEFAULT_COUNTS:
        raise ValueError(f"unknown experiment preset {name!r}")
    cfg = RunConfig(experiment=name, n=_DEFAULT_COUNTS[name])
    if n is not None:
        cfg.n = int(n)
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown config field {k!r}")
        setattr(cfg, k, v)
    return cfg


@dataclass
class RunPlan:
    """Everything a run needs, resolved: geometry, conditions, parameters."""

    config: RunConfig
    dom: object
    patches: list
    cells: list
    bcs: list
    confining_dom: object
    params: SimParams
    center: np.ndarray
    velocity: object = None
    source: object = None
    info: dict = field(default_factory=dict)

    def resolved_config(self):
        """Config copy with every derived numeric filled in (for manifests)."""
        p = self.params
        return replace(
            self.config,
            diffusivity=p.diffusivity,
            total_time=p.total_time,
            dt=p.dt,
            beta=p.beta,
            beta_prefactor=p.beta_prefactor,
            layer_depth=p.layer_depth,
            penalty_stiffness=p.penalty_stiffness,
            mass_per_particle=p.mass_per_particle,
            spacing=p.spacing,
            ref_density=p.ref_density,
            cutoff=p.cutoff,
            force_model=p.force_model,
        )


def _build_preset_geometry(cfg):
    if cfg.experiment == "sphere":
        dom = geometry.Sphere(np.zeros(3), SPHERE["radius"])
        kinds = {0: (geometry.DIRICHLET, SPHERE["g"])}
        outlet = None
        info = dict(SPHERE, mass_steady=SPHERE["mass_steady"])
    elif cfg.experiment == "box":
        b = BOX["breadth"]
        dom = geometry.Box(np.zeros(3), np.array([BOX["length"], b, b]))
        kinds = {0: (geometry.DIRICHLET, BOX["rho_steady"])}
        outlet = None
        info = dict(BOX)
    elif cfg.experiment == "pipe":
        dom = geometry.Cylinder(np.zeros(3), np.array([1.0, 0.0, 0.0]), PIPE["length"], PIPE["radius"])
        kinds = {
            0: (geometry.NEUMANN, PIPE["flux_in"]),
            1: (geometry.NEUMANN, -PIPE["flux_out"]),
        }
        outlet = PIPE["outlet_radius"]
        info = dict(PIPE)
    else:
        raise ValueError(f"unknown experiment preset {cfg.experiment!r}")
    return dom, kinds, outlet, info


def _build_custom_geometry(cfg):
    d = cfg.domain or {}
    shape = d.get("shape")
    if shape == "sphere":
        dom = geometry.Sphere(d.get("center", (0.0, 0.0, 0.0)), d["radius"])
        outlet = None
    elif shape == "box":
        dom = geometry.Box(d["lo"], d["hi"])
        outlet = None
    elif shape == "cylinder":
        dom = geometry.Cylinder(
            d.get("base", (0.0, 0.0, 0.0)), d.get("axis", (1.0, 0.0, 0.0)),
            d["length"], d["radius"],
        )
        outlet = d.get("outlet_radius")
    else:
        raise ValueError("custom run needs a [domain] section with shape sphere|box|cylinder")
    kinds = {pid: (kind, value) for pid, (kind, value) in (cfg.bcs or {}).items()}
    return dom, kinds, outlet, dict(d)


def resolve(cfg, velocity=None, source=None):
    """Turn a RunConfig into a RunPlan, deriving whatever was not pinned."""
    custom = cfg.experiment not in PRESET_NAMES
    if custom and cfg.experiment != "custom":
        raise ValueError(f"unknown experiment {cfg.experiment!r}")
    if cfg.initial_fill is None:
        cfg = replace(cfg, initial_fill="uniform" if cfg.experiment == "pipe" else "none")
    if custom:
        dom, kinds, outlet, info = _build_custom_geometry(cfg)
        if cfg.mass_per_particle is None:
            raise ValueError("custom runs must set mass_per_particle")
        spacing = cfg.spacing or (dom.volume() / cfg.n) ** (1.0 / 3.0)
        # generic depth rule: geometric mean of spacing and the smallest
        # feature size, kept clear of the inradius so cells never overlap
        depth = min(math.sqrt(dom.inradius() * spacing), 0.5 * dom.inradius())
        kw = dict(
            diffusivity=1.0,
            mass_per_particle=cfg.mass_per_particle,
            spacing=spacing,
            total_time=cfg.total_time if cfg.total_time is not None else 1.0,
            layer_depth=depth,
            seed=cfg.seed,
        )
    else:
        dom, kinds, outlet, info = _build_preset_geometry(cfg)
        kw = _derive_kwargs(cfg.experiment, cfg.n, total_time=cfg.total_time, seed=cfg.seed)

    # explicit numeric pins beat derivation (a pinned beta_prefactor still
    # derives beta from the spacing; a pinned beta wins outright)
    for name in ("spacing", "dt", "beta", "layer_depth", "penalty_stiffness",
                 "mass_per_particle", "ref_density", "cutoff", "diffusivity",
                 "beta_prefactor", "force_model"):
        v = getattr(cfg, name)
        if v is not None:
            kw[name] = v
    params = SimParams(**kw)

    surfaces = geometry.list_surfaces(dom, outlet_radius=outlet)
    patches = []
    for i, s in enumerate(surfaces):
        kind = kinds.get(i, (geometry.WALL, None))[0]
        patches.append(geometry.Patch(i, s, kind))
    cells = geometry.build_layers(dom, patches, params.layer_depth)
    bcs = [
        BoundaryCondition(patches[pid], cells[pid], value)
        for pid, (kind, value) in sorted(kinds.items())
        if kind != geometry.WALL
    ]
    confining = geometry.penalty_domain(dom, patches, params.layer_depth)
    if velocity is not None:
        check_tangency(velocity, patches, np.random.default_rng(params.seed))
    return RunPlan(
        config=cfg,
        dom=dom,
        patches=patches,
        cells=cells,
        bcs=bcs,
        confining_dom=confining,
        params=params,
        center=dom.centroid(),
        velocity=velocity,
        source=source,
        info=info,
    )
