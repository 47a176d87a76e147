"""Run configuration: a flat key=value file with one section per concern.

Every numeric left unset is derived from the experiment preset and the
particle count at resolve time; anything set here pins that value.  Unknown
sections or keys are rejected outright so typos cannot silently fall back
to defaults.
"""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields

_RUN_KEYS = {
    "experiment", "n", "seed", "out", "snapshot_every", "corrector_log", "initial_fill",
}
_PARAM_KEYS = {
    "total_time", "dt", "beta", "beta_prefactor", "layer_depth", "penalty_stiffness",
    "mass_per_particle", "spacing", "diffusivity", "ref_density", "cutoff",
    "force_model", "density_ceiling", "starvation_limit",
}
_DOMAIN_KEYS = {"shape", "center", "radius", "lo", "hi", "base", "axis", "length", "outlet_radius"}
_SWEEP_KEYS = {"n_values"}


@dataclass
class RunConfig:
    experiment: str = "custom"
    n: int = 1000
    seed: int = 0
    out: str | None = None
    snapshot_every: int = 0
    corrector_log: bool = True
    initial_fill: str | None = None  # none | uniform; None = preset default

    total_time: float | None = None
    dt: float | None = None
    beta: float | None = None
    beta_prefactor: float | None = None
    layer_depth: float | None = None
    penalty_stiffness: float | None = None
    mass_per_particle: float | None = None
    spacing: float | None = None
    diffusivity: float | None = None
    ref_density: float | None = None
    cutoff: float | None = None
    force_model: str | None = None
    density_ceiling: float | None = None
    starvation_limit: int | None = None  # opt-in diagnostic; None = never abort

    domain: dict | None = None
    bcs: dict | None = None  # patch id -> (kind, value)
    sweep_n: list = field(default_factory=list)

    def __post_init__(self):
        if self.initial_fill not in (None, "none", "uniform"):
            raise ValueError("initial_fill must be 'none' or 'uniform'")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")

    def output_dir(self):
        if self.out:
            return self.out
        base = os.environ.get("BLOBSIM_OUTDIR", "out")
        return os.path.join(base, f"{self.experiment}_{self.n}")


def _parse_vec(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_value(key, text):
    text = text.strip()
    if key in ("experiment", "out", "initial_fill", "force_model", "shape"):
        return text
    if key in ("n", "seed", "snapshot_every", "starvation_limit"):
        return int(text)
    if key == "corrector_log":
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"boolean expected for corrector_log, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if key in ("center", "lo", "hi", "base", "axis"):
        return _parse_vec(text)
    if key == "n_values":
        return [int(v) for v in text.replace(",", " ").split()]
    return float(text)


def load_config(path_or_text):
    """Parse a config file (path or literal text) into a RunConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if os.path.exists(str(path_or_text)):
        cp.read(path_or_text)
    else:
        cp.read_string(path_or_text)

    cfg = RunConfig()
    known_sections = {"run": _RUN_KEYS, "params": _PARAM_KEYS, "domain": _DOMAIN_KEYS, "sweep": _SWEEP_KEYS}
    for section in cp.sections():
        if section == "bc":
            bcs = {}
            for key, raw in cp.items(section):
                if not key.startswith("patch_"):
                    raise ValueError(f"unknown key {key!r} in [bc] (expected patch_<id>)")
                pid = int(key[len("patch_"):])
                parts = raw.split()
                if len(parts) != 2 or parts[0] not in ("dirichlet", "neumann"):
                    raise ValueError(f"[bc] {key} must be 'dirichlet <g>' or 'neumann <f>'")
                bcs[pid] = (parts[0], float(parts[1]))
            cfg.bcs = bcs
            continue
        if section not in known_sections:
            raise ValueError(f"unknown config section [{section}]")
        allowed = known_sections[section]
        for key, raw in cp.items(section):
            if key not in allowed:
                raise ValueError(f"unknown key {key!r} in [{section}]")
            value = _parse_value(key, raw)
            if section == "domain":
                cfg.domain = cfg.domain or {}
                cfg.domain[key] = value
            elif section == "sweep":
                cfg.sweep_n = value
            else:
                setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg


def apply_overrides(cfg, **overrides):
    """CLI-style overrides: only keys explicitly given replace file values."""
    for key, value in overrides.items():
        if value is None:
            continue
        if not hasattr(cfg, key):
            raise ValueError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg


def dump_config(cfg):
    """Serialize a RunConfig back to the file format (stable key order)."""
    out = io.StringIO()
    out.write("[run]\n")
    for key in ("experiment", "n", "seed", "out", "snapshot_every", "corrector_log", "initial_fill"):
        v = getattr(cfg, key)
        if v is not None:
            out.write(f"{key} = {_fmt_value(v)}\n")
    out.write("\n[params]\n")
    for key in sorted(_PARAM_KEYS):
        v = getattr(cfg, key)
        if v is not None:
            out.write(f"{key} = {_fmt_value(v)}\n")
    if cfg.domain:
        out.write("\n[domain]\n")
        for key in sorted(cfg.domain):
            out.write(f"{key} = {_fmt_value(cfg.domain[key])}\n")
    if cfg.bcs:
        out.write("\n[bc]\n")
        for pid in sorted(cfg.bcs):
            kind, value = cfg.bcs[pid]
            out.write(f"patch_{pid} = {kind} {value!r}\n")
    if cfg.sweep_n:
        out.write("\n[sweep]\n")
        out.write(f"n_values = {', '.join(str(v) for v in cfg.sweep_n)}\n")
    return out.getvalue()


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    return str(v)
