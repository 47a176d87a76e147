"""Boundary-layer mass exchange: the corrector half of the fractional step.

Density patches pin the particle count inside the interior layer cell to
the count a prescribed boundary density would put there; flux patches
insert or remove the particles carried through the patch per step.  Both
act purely by insertion/removal -- existing particles are never moved --
and both quantize to whole particles with a remainder carry so the
long-run exchanged mass is exact.

The exterior half-cell of a density patch is never touched: it is the
buffer between the true boundary and the displaced barrier, absorbing the
spurious particle pile-up that any impenetrable barrier causes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DIRICHLET, NEUMANN


class CorrectorError(RuntimeError):
    pass


class StarvationError(CorrectorError):
    """Persistent outflux starvation: the layer cannot supply the removals."""


class DensityCeilingError(CorrectorError):
    """The layer target implies a density above the configured ceiling."""


@dataclass
class CorrectorRecord:
    step: int
    patch_id: int
    kind: str
    target_count: int
    actual_count: int
    inserted: int
    removed: int


@dataclass
class BoundaryCondition:
    """One active patch: its layer cell plus the prescribed g or f.

    ``value`` is the boundary density (density kind) or the signed inward
    mass flux per area and time (flux kind, positive = into the domain);
    either a constant or a callable ``value(points, t)`` integrated by the
    patch quadrature.
    """

    patch: object
    cell: object
    value: object
    mass_remainder: float = 0.0
    starved_steps: int = 0

    @property
    def kind(self):
        return self.patch.kind

    def patch_mean(self, t):
        """Area integral of the prescribed value over the patch."""
        if callable(self.value):
            pts, w = self.patch.surface.quad_points()
            return float(w @ np.asarray(self.value(pts, t), dtype=float))
        return float(self.value) * self.patch.area()


def dirichlet_target(bc, t):
    """Layer mass holding the prescribed density in the interior cell.

    Uses the exact cell volume (curved shells are thinner than area x b),
    so the pinned layer density equals g; for flat patches this reduces to
    the first-order b * integral(g dA).
    """
    if bc.kind != DIRICHLET:
        raise ValueError("density target requested for a non-density patch")
    thickness = bc.cell.interior.volume() / bc.patch.area()
    return thickness * bc.patch_mean(t)


def dirichlet_correct(ps, bc, t, rng, density_ceiling=None, step=0):
    """Pin the particle count in the interior cell to the target.

    Insertions are uniform in the interior cell with insert time ``t``;
    removals pick uniformly among the cell's residents.  Survivor
    positions are left bitwise untouched.
    """
    target_mass = dirichlet_target(bc, t)
    if density_ceiling is not None:
        if target_mass / bc.cell.interior.volume() > density_ceiling:
            raise DensityCeilingError(
                f"patch {bc.patch.pid}: layer target density exceeds ceiling "
                f"{density_ceiling:g}; check the layer depth / width pairing"
            )
    n_target = int(math.floor(target_mass / ps.mass + 1e-9))
    residents = np.flatnonzero(bc.cell.interior.contains(ps.pos))
    diff = n_target - residents.size
    inserted = removed = 0
    if diff > 0:
        ps.insert(bc.cell.interior.sample(diff, rng), t)
        inserted = diff
    elif diff < 0:
        drop = rng.choice(residents, size=-diff, replace=False)
        ps.remove(drop)
        removed = -diff
    return CorrectorRecord(step, bc.patch.pid, bc.kind, n_target, int(residents.size), inserted, removed)


def neumann_target(bc, t0, t1):
    """Mass carried through the patch during [t0, t1] (midpoint rule in time)."""
    if bc.kind != NEUMANN:
        raise ValueError("flux target requested for a non-flux patch")
    return bc.patch_mean(0.5 * (t0 + t1)) * (t1 - t0)


def neumann_correct(ps, bc, t0, t1, rng, starvation_limit=None, step=0):
    """Insert/remove the whole particles carried by the flux this step.

    Sub-particle mass carries over in ``bc.mass_remainder`` (magnitude
    always below one particle), so the long-run exchanged mass is exact.
    Insertions land uniformly in the interior half-cell -- entering mass
    must appear inside the domain, behind the barrier.  When removals
    exceed the residents, all residents go, the deficit stays in the
    remainder, and the starvation counter advances.
    """
    delta = neumann_target(bc, t0, t1) + bc.mass_remainder
    count = int(math.copysign(math.floor(abs(delta) / ps.mass + 1e-9), delta))
    bc.mass_remainder = delta - count * ps.mass
    residents = np.flatnonzero(bc.cell.interior.contains(ps.pos))
    inserted = removed = 0
    if count > 0:
        ps.insert(bc.cell.interior.sample(count, rng), t1)
        inserted = count
        bc.starved_steps = 0
    elif count < 0:
        k = min(-count, residents.size)
        if k:
            ps.remove(rng.choice(residents, size=k, replace=False))
        removed = k
        shortfall = -count - k
        if shortfall:
            bc.mass_remainder -= shortfall * ps.mass
            bc.starved_steps += 1
            if starvation_limit is not None and bc.starved_steps > starvation_limit:
                raise StarvationError(
                    f"patch {bc.patch.pid}: outflux starved for "
                    f"{bc.starved_steps} consecutive steps"
                )
        else:
            bc.starved_steps = 0
    return CorrectorRecord(step, bc.patch.pid, bc.kind, count, int(residents.size), inserted, removed)
