"""Fractional-step particle updates: advection, sources, entropic diffusion.

One full step applies, in order: an advection map, a multiplicative source
adjustment of the particle count, and the explicit diffusion update

    x_r += dt * (F_entropy(x_r) - grad Psi(x_r)),

where Psi = (C/2) dist^2(x, confining domain) is the quadratic barrier and
F_entropy drives descent of the blob entropy (particles drift from high to
low mollified density).  Two force models are available:

* ``log_density``  -- F_r = -kappa * grad rho(x_r) / rho(x_r)
* ``variational``  -- additionally the neighbor-mediated term, i.e. exactly
  -(kappa/m) d/dx_r [ sum_p m log rho(x_p) ]

Boundary handling lives in :mod:`blobsim.boundary`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blobs import GaussianKernel, entropy_cross_sum, particle_density_gradient

FORCE_MODELS = ("log_density", "variational")


class StabilityError(RuntimeError):
    """Raised when a step produces displacements incompatible with the CFL bound."""


@dataclass
class SimParams:
    """Resolved numerical parameters of one run.

    ``spacing`` is the nominal inter-particle distance the other parameters
    derive from: beta = beta_prefactor / spacing^2, the stable time step is
    spacing^2 / diffusivity, and the barrier stiffness defaults to 1/dt so a
    stray particle relaxes to the wall in a single step.
    """

    diffusivity: float
    mass_per_particle: float
    spacing: float
    total_time: float
    dt: float | None = None
    beta: float | None = None
    beta_prefactor: float = 2.0
    layer_depth: float | None = None
    penalty_stiffness: float | None = None
    ref_density: float = 1.0
    seed: int = 0
    force_model: str = "log_density"
    cutoff: float = 6.0

    def __post_init__(self):
        if self.diffusivity <= 0.0 or self.mass_per_particle <= 0.0 or self.spacing <= 0.0:
            raise ValueError("diffusivity, particle mass, and spacing must be positive")
        if self.beta is None:
            self.beta = self.beta_prefactor / self.spacing**2
        if self.dt is None:
            self.dt = self.stable_dt
        if self.dt > self.stable_dt * (1.0 + 1e-9):
            raise ValueError(
                f"dt={self.dt:g} exceeds the stable step {self.stable_dt:g} "
                "(spacing^2 / diffusivity)"
            )
        if self.penalty_stiffness is None:
            self.penalty_stiffness = 1.0 / self.dt
        if self.force_model not in FORCE_MODELS:
            raise ValueError(f"force_model must be one of {FORCE_MODELS}")
        if self.total_time <= 0.0:
            raise ValueError("total_time must be positive")

    @property
    def stable_dt(self):
        return self.spacing**2 / self.diffusivity

    @property
    def n_steps(self):
        return math.ceil(self.total_time / self.dt - 1e-9)

    def kernel(self):
        return GaussianKernel(beta=self.beta, dim=3, cutoff=self.cutoff)


# ---------------------------------------------------------------------------
# velocity and source fields


class ZeroVelocity:
    def __call__(self, x, t):
        return np.zeros_like(np.atleast_2d(x))


@dataclass
class UniformVelocity:
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)

    def __call__(self, x, t):
        return np.broadcast_to(self.vector, np.atleast_2d(x).shape)

    def flow(self, x, t, dt):
        return x + self.vector * dt


@dataclass
class RotationVelocity:
    """Rigid rotation about an axis through a center; provides the exact map."""

    center: np.ndarray
    axis: np.ndarray
    omega: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        a = np.asarray(self.axis, dtype=float)
        self.axis = a / np.linalg.norm(a)

    def __call__(self, x, t):
        w = np.atleast_2d(x) - self.center
        return self.omega * np.cross(self.axis, w)

    def flow(self, x, t, dt):
        w = np.atleast_2d(x) - self.center
        ang = self.omega * dt
        c, s = math.cos(ang), math.sin(ang)
        a = self.axis
        par = (w @ a)[:, None] * a
        perp = w - par
        return self.center + par + c * perp + s * np.cross(a, perp)


def check_tangency(u, patches, rng, samples=256, tol=1e-8):
    """Reject velocity fields with a normal component on the boundary."""
    if u is None or isinstance(u, ZeroVelocity):
        return
    for p in patches:
        pts, normals = p.surface.sample(samples, rng)
        vn = np.einsum("ij,ij->i", np.atleast_2d(u(pts, 0.0)), normals)
        worst = float(np.max(np.abs(vn)))
        if worst > tol:
            raise ValueError(
                f"velocity field has normal component {worst:.2e} on patch {p.pid}"
            )


# ---------------------------------------------------------------------------
# fractional steps


def advect_step(ps, u, t, dt):
    """Move particles along the velocity field (exact map when available)."""
    if u is None or ps.n == 0:
        return
    if hasattr(u, "flow"):
        ps.pos = np.asarray(u.flow(ps.pos, t, dt), dtype=float)
    else:
        ps.pos = ps.pos + np.atleast_2d(u(ps.pos, t)) * dt


@dataclass
class SourceAccumulator:
    """Carries the expected-minus-realized source mass between steps."""

    balance: float = 0.0


def source_step(ps, s, t, dt, rng, kernel, acc=None):
    """Multiply local mass by exp(s dt) via duplication/culling of particles.

    Each particle independently duplicates with probability exp(s dt) - 1
    (growth) or survives with probability exp(s dt) (decay); duplicates are
    jittered by a Gaussian of scale 1/sqrt(beta) so mass is added at the
    kernel's own resolution.  The accumulator converts leftover expected
    mass into occasional extra duplications/removals so the realized total
    tracks the exact exponential on average.
    """
    if s is None or ps.n == 0:
        return
    rate = s(ps.pos, t) if callable(s) else float(s)
    rate = np.broadcast_to(np.asarray(rate, dtype=float), (ps.n,))
    factor = np.exp(rate * dt)
    if np.any(factor - 1.0 > 1.0):
        raise ValueError(
            "source growth exp(s dt) - 1 exceeds 1 in one step; decrease dt"
        )
    expected = ps.mass * float(np.sum(factor - 1.0))

    grow = factor > 1.0
    decay = factor < 1.0
    dup_idx = np.flatnonzero(grow & (rng.random(ps.n) < factor - 1.0))
    kill_idx = np.flatnonzero(decay & (rng.random(ps.n) >= factor))
    realized = ps.mass * (len(dup_idx) - len(kill_idx))

    if acc is not None:
        acc.balance += expected - realized
        while acc.balance >= ps.mass and ps.n:
            pool = np.flatnonzero(grow) if grow.any() else np.arange(ps.n)
            dup_idx = np.append(dup_idx, rng.choice(pool))
            acc.balance -= ps.mass
        while acc.balance <= -ps.mass and ps.n:
            pool = np.flatnonzero(decay) if decay.any() else np.arange(ps.n)
            extra = np.setdiff1d(pool, kill_idx)
            if extra.size == 0:
                break
            kill_idx = np.append(kill_idx, rng.choice(extra))
            acc.balance += ps.mass

    if len(dup_idx):
        jitter = rng.normal(scale=kernel.width, size=(len(dup_idx), 3))
        ps.insert(ps.pos[np.asarray(dup_idx, dtype=np.int64)] + jitter, t + dt)
    if len(kill_idx):
        ps.remove(np.asarray(kill_idx, dtype=np.int64))


def entropic_force(ps, kernel, diffusivity, grid=None, model="log_density", rho_grad=None):
    """Per-particle entropic drift velocity; see the module docstring for models."""
    if ps.n == 0:
        return np.empty((0, 3))
    rho, grad = rho_grad if rho_grad is not None else particle_density_gradient(ps, kernel, grid)
    force = -diffusivity * grad / rho[:, None]
    if model == "variational":
        cross = entropy_cross_sum(ps, kernel, rho, grid)
        force -= diffusivity * 2.0 * kernel.beta * ps.mass * cross
    elif model != "log_density":
        raise ValueError(f"force_model must be one of {FORCE_MODELS}")
    return force


def penalty_gradient(points, confining_dom, stiffness):
    """grad Psi = C * (x - nearest point of the confining domain)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return stiffness * (pts - confining_dom.project(pts))


def diffusion_step(ps, kernel, diffusivity, dt, confining_dom, stiffness,
                   grid=None, model="log_density", rho_grad=None):
    """Explicit entropic/penalty position update; returns step diagnostics.

    Never inserts or removes particles.  Aborts when any displacement
    exceeds the confining domain diameter, which only happens when the CFL
    bound was violated.
    """
    if ps.n == 0:
        return {"max_displacement": 0.0, "max_entropic_speed": 0.0}
    force = entropic_force(ps, kernel, diffusivity, grid=grid, model=model, rho_grad=rho_grad)
    max_speed = float(np.sqrt(np.max(np.einsum("ij,ij->i", force, force))))
    force -= penalty_gradient(ps.pos, confining_dom, stiffness)
    disp = dt * force
    max_disp = float(np.sqrt(np.max(np.einsum("ij,ij->i", disp, disp))))
    if max_disp > confining_dom.diameter():
        raise StabilityError(
            f"displacement {max_disp:.3g} exceeds the domain diameter "
            f"{confining_dom.diameter():.3g}; the time step violates the CFL bound"
        )
    ps.pos = ps.pos + disp
    return {"max_displacement": max_disp, "max_entropic_speed": max_speed}
