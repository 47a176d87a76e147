"""Particle storage, the mollified density field, and its cell-grid index.

A ParticleSet is the discrete measure sum_p m delta(x - x_p) with one global
mass per particle.  The density seen by the dynamics smears every particle
into a normalized Gaussian of precision ``beta``:

    rho(x) = m * sum_p (beta/pi)^(d/2) exp(-beta |x - x_p|^2)

Sums run either brute-force (exact, O(n^2), the test oracle) or over a
CellGrid whose cell size is the neighborhood radius cutoff/sqrt(beta); the
truncation error is bounded by n * m * (beta/pi)^(d/2) * e^-cutoff^2.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianKernel:
    """Blob profile parameters: precision beta, dimension, cutoff in widths."""

    beta: float
    dim: int = 3
    cutoff: float = 6.0

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.cutoff < 3.0:
            log.warning("kernel cutoff %.2f < 3 truncates visibly", self.cutoff)

    @property
    def prefactor(self):
        return (self.beta / math.pi) ** (self.dim / 2.0)

    @property
    def width(self):
        return 1.0 / math.sqrt(self.beta)

    @property
    def cutoff_radius(self):
        return self.cutoff * self.width

    @property
    def cutoff_sq(self):
        return self.cutoff_radius**2

    def truncation_bound(self, n, mass):
        return n * mass * self.prefactor * math.exp(-self.cutoff**2)


class ParticleSet:
    """Structure-of-arrays particle store with stable integer ids.

    Removal keeps survivors in order; ids are never reused, so exported
    snapshots can be joined across time.
    """

    def __init__(self, mass, positions=None, insert_time=0.0):
        self.mass = float(mass)
        if self.mass <= 0.0:
            raise ValueError("per-particle mass must be positive")
        self.pos = np.empty((0, 3), dtype=float)
        self.insert_time = np.empty(0, dtype=float)
        self.ids = np.empty(0, dtype=np.int64)
        self._next_id = 0
        if positions is not None:
            self.insert(positions, insert_time)

    @property
    def n(self):
        return self.pos.shape[0]

    def __len__(self):
        return self.n

    @property
    def total_mass(self):
        return self.n * self.mass

    def insert(self, points, time):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = points.shape[0]
        if k == 0:
            return np.empty(0, dtype=np.int64)
        new_ids = np.arange(self._next_id, self._next_id + k, dtype=np.int64)
        self._next_id += k
        self.pos = np.concatenate([self.pos, points])
        self.insert_time = np.concatenate([self.insert_time, np.full(k, float(time))])
        self.ids = np.concatenate([self.ids, new_ids])
        return new_ids

    def remove(self, indices):
        if len(indices) == 0:
            return
        keep = np.ones(self.n, dtype=bool)
        keep[np.asarray(indices, dtype=np.int64)] = False
        self.pos = self.pos[keep]
        self.insert_time = self.insert_time[keep]
        self.ids = self.ids[keep]

    def copy(self):
        out = ParticleSet(self.mass)
        out.pos = self.pos.copy()
        out.insert_time = self.insert_time.copy()
        out.ids = self.ids.copy()
        out._next_id = self._next_id
        return out


class CellGrid:
    """CSR bucket index of particles on a regular grid of cells.

    Cell size is at least the kernel neighborhood radius, so scanning the
    3x3x3 block around a point covers every in-range particle.  Build order
    uses a stable sort: identical inputs index identically.
    """

    def __init__(self, positions, cell_size, bounds):
        positions = np.asarray(positions, dtype=float)
        lo, hi = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
        if positions.shape[0]:
            pmin, pmax = positions.min(axis=0), positions.max(axis=0)
            if np.any(pmin < lo) or np.any(pmax > hi):
                log.warning("particles outside grid bounds; growing the grid box")
                lo = np.minimum(lo, pmin)
                hi = np.maximum(hi, pmax)
        self.origin = lo
        self.cell_size = float(cell_size)
        span = np.maximum(hi - lo, self.cell_size)
        self.shape = np.maximum(np.ceil(span / self.cell_size).astype(np.int64), 1)
        nx, ny, nz = self.shape
        coords = np.floor((positions - lo) / self.cell_size).astype(np.int64)
        coords = np.clip(coords, 0, self.shape - 1)  # right-edge points
        lin = coords[:, 0] + nx * (coords[:, 1] + ny * coords[:, 2])
        self.order = np.argsort(lin, kind="stable")
        counts = np.bincount(lin, minlength=int(nx * ny * nz))
        self.start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.n = positions.shape[0]

    @classmethod
    def build(cls, ps, kernel, bounds=None):
        if bounds is None:
            if ps.n == 0:
                bounds = (np.zeros(3), np.ones(3))
            else:
                bounds = (ps.pos.min(axis=0), ps.pos.max(axis=0))
        return cls(ps.pos, kernel.cutoff_radius, bounds)

    def query(self, x):
        """Indices of all particles in the 3x3x3 cell block around x."""
        x = np.asarray(x, dtype=float)
        c = np.floor((x - self.origin) / self.cell_size).astype(np.int64)
        nx, ny, nz = self.shape
        chunks = []
        for dz in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    bx, by, bz = c[0] + dx, c[1] + dy, c[2] + dz
                    if 0 <= bx < nx and 0 <= by < ny and 0 <= bz < nz:
                        b = bx + nx * (by + ny * bz)
                        chunks.append(self.order[self.start[b] : self.start[b + 1]])
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(chunks)

    def _kernel_args(self):
        nx, ny, nz = (int(v) for v in self.shape)
        ox, oy, oz = (float(v) for v in self.origin)
        return self.order, self.start, nx, ny, nz, ox, oy, oz, self.cell_size


def _brute_raw(probes, pos, kernel, chunk=512):
    """Untruncated O(n^2) kernel sums; the independent oracle path."""
    m = probes.shape[0]
    rho = np.zeros(m)
    grad = np.zeros((m, 3))
    if pos.shape[0] == 0:
        return rho, grad
    for a in range(0, m, chunk):
        sl = slice(a, min(a + chunk, m))
        d = probes[sl, None, :] - pos[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", d, d)
        w = kernel.prefactor * np.exp(-kernel.beta * d2)
        rho[sl] = w.sum(axis=1)
        grad[sl] = -2.0 * kernel.beta * np.einsum("ij,ijk->ik", w, d)
    return rho, grad


def density(x, ps, kernel, grid=None):
    """Mollified density at probe points; brute force when grid is None."""
    probes, single = _points(x)
    if grid is None:
        rho, _ = _brute_raw(probes, ps.pos, kernel)
    else:
        rho, _ = _kernels.probe_density_grad(
            probes, ps.pos, *grid._kernel_args(), kernel.beta, kernel.prefactor, kernel.cutoff_sq
        )
    rho = ps.mass * rho
    return rho[0] if single else rho


def density_gradient(x, ps, kernel, grid=None):
    """(rho, grad rho) at probe points."""
    probes, single = _points(x)
    if grid is None:
        rho, grad = _brute_raw(probes, ps.pos, kernel)
    else:
        rho, grad = _kernels.probe_density_grad(
            probes, ps.pos, *grid._kernel_args(), kernel.beta, kernel.prefactor, kernel.cutoff_sq
        )
    rho = ps.mass * rho
    grad = ps.mass * grad
    return (rho[0], grad[0]) if single else (rho, grad)


def particle_density_gradient(ps, kernel, grid=None):
    """(rho, grad rho) at every particle's own position, self term included."""
    if ps.n == 0:
        return np.empty(0), np.empty((0, 3))
    if grid is None:
        rho, grad = _brute_raw(ps.pos, ps.pos, kernel)
    else:
        rho, grad = _kernels.self_density_grad(
            ps.pos, *grid._kernel_args(), kernel.beta, kernel.prefactor, kernel.cutoff_sq
        )
    return ps.mass * rho, ps.mass * grad


def entropy_cross_sum(ps, kernel, rho, grid=None):
    """sum_p w_rp (x_p - x_r) / rho(x_p) for every particle r.

    rho is the mass-scaled density at each particle.  Scaled by
    2 beta m kappa this is the neighbor-mediated part of the variational
    entropy force.
    """
    if ps.n == 0:
        return np.empty((0, 3))
    if grid is None:
        d = ps.pos[:, None, :] - ps.pos[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", d, d)
        w = kernel.prefactor * np.exp(-kernel.beta * d2)
        return -np.einsum("ij,ijk->ik", w / rho[None, :], d)
    nx, ny, nz = (int(v) for v in grid.shape)
    return _kernels.cross_sum(
        ps.pos, grid.order, grid.start, nx, ny, nz,
        kernel.beta, kernel.prefactor, kernel.cutoff_sq, rho,
    )


def _points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    return (pts[None, :] if single else pts), single


def write_snapshot(path, ps, time):
    """CSV snapshot: id,x,y,z,mass,insert_time,age."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "z", "mass", "insert_time", "age"])
        for i in range(ps.n):
            w.writerow(
                [
                    int(ps.ids[i]),
                    _fmt(ps.pos[i, 0]),
                    _fmt(ps.pos[i, 1]),
                    _fmt(ps.pos[i, 2]),
                    _fmt(ps.mass),
                    _fmt(ps.insert_time[i]),
                    _fmt(time - ps.insert_time[i]),
                ]
            )


def _fmt(v):
    return format(float(v), ".17e")
