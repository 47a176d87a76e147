"""Analytic domains, boundary patches, and boundary-layer cells.

Three convex primitives (ball, axis-aligned box, right circular cylinder)
provide distance and nearest-point queries, an exact partition of their
surface into patches, and the slab/shell cells of a boundary layer of
half-thickness ``b`` straddling each patch.  Convexity makes every
nearest-point projection unique, so no tie-breaking is ever needed.

All queries are pure and vectorize over ``(n, 3)`` point arrays; a single
``(3,)`` point is accepted and returns scalars.  Sampling takes an explicit
``numpy.random.Generator`` and is closed-form (inverse CDF per coordinate),
never rejection-based -- there is no hidden RNG state and no wasted draws.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    return pts, single


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector cannot be normalized")
    return v / n


def orthonormal_frame(axis):
    """Axis plus two perpendicular unit vectors, chosen deterministically."""
    a = _unit(axis)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(a)))] = 1.0
    u = np.cross(a, e)
    u /= np.linalg.norm(u)
    v = np.cross(a, u)
    return a, u, v


# ---------------------------------------------------------------------------
# domains


@dataclass
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radius = float(self.radius)
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")

    @property
    def dim(self):
        return 3

    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius**3

    def inradius(self):
        return self.radius

    def feature_size(self):
        return self.radius

    def diameter(self):
        return 2.0 * self.radius

    def centroid(self):
        return self.center.copy()

    def bbox(self, pad=0.0):
        r = self.radius + pad
        return self.center - r, self.center + r

    def dist(self, x):
        pts, single = _as_points(x)
        r = np.linalg.norm(pts - self.center, axis=1)
        d = np.maximum(r - self.radius, 0.0)
        return d[0] if single else d

    def project(self, x):
        pts, single = _as_points(x)
        w = pts - self.center
        r = np.linalg.norm(w, axis=1)
        out = pts.copy()
        mask = r > self.radius
        out[mask] = self.center + w[mask] * (self.radius / r[mask])[:, None]
        return out[0] if single else out

    def contains(self, x):
        return self.dist(x) == 0.0

    def sample_inside(self, n, rng):
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        r = self.radius * np.cbrt(rng.random(n))
        return self.center + r[:, None] * d


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if not np.all(self.hi > self.lo):
            raise ValueError("box needs hi > lo componentwise")

    @property
    def dim(self):
        return 3

    def extents(self):
        return self.hi - self.lo

    def volume(self):
        return float(np.prod(self.extents()))

    def inradius(self):
        return float(np.min(self.extents()) / 2.0)

    def feature_size(self):
        return float(np.min(self.extents()))

    def diameter(self):
        return float(np.linalg.norm(self.extents()))

    def centroid(self):
        return (self.lo + self.hi) / 2.0

    def bbox(self, pad=0.0):
        return self.lo - pad, self.hi + pad

    def dist(self, x):
        pts, single = _as_points(x)
        clamped = np.clip(pts, self.lo, self.hi)
        d = np.linalg.norm(pts - clamped, axis=1)
        return d[0] if single else d

    def project(self, x):
        pts, single = _as_points(x)
        out = np.clip(pts, self.lo, self.hi)
        return out[0] if single else out

    def contains(self, x):
        return self.dist(x) == 0.0

    def sample_inside(self, n, rng):
        return self.lo + rng.random((n, 3)) * self.extents()


@dataclass
class Cylinder:
    """Right circular cylinder: base disc center, unit axis, length, radius."""

    base: np.ndarray
    axis: np.ndarray
    length: float
    radius: float
    _frame: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.length = float(self.length)
        self.radius = float(self.radius)
        if self.length <= 0.0 or self.radius <= 0.0:
            raise ValueError("cylinder needs positive length and radius")
        self._frame = orthonormal_frame(self.axis)
        self.axis = self._frame[0]

    @property
    def dim(self):
        return 3

    def frame(self):
        return self._frame

    def local(self, pts):
        """Axial coordinate and radial vector/distance of points."""
        w = pts - self.base
        ax = w @ self.axis
        radial = w - ax[:, None] * self.axis
        r = np.linalg.norm(radial, axis=1)
        return ax, radial, r

    def volume(self):
        return math.pi * self.radius**2 * self.length

    def inradius(self):
        return min(self.radius, self.length / 2.0)

    def feature_size(self):
        return min(self.radius, self.length)

    def diameter(self):
        return math.hypot(self.length, 2.0 * self.radius)

    def centroid(self):
        return self.base + 0.5 * self.length * self.axis

    def bbox(self, pad=0.0):
        ends = np.stack([self.base, self.base + self.length * self.axis])
        r = self.radius + pad
        return ends.min(axis=0) - r, ends.max(axis=0) + r

    def project(self, x):
        pts, single = _as_points(x)
        ax, radial, r = self.local(pts)
        inside = (ax >= 0.0) & (ax <= self.length) & (r <= self.radius)
        axc = np.clip(ax, 0.0, self.length)
        with np.errstate(invalid="ignore", divide="ignore"):
            rdir = np.where(r[:, None] > 0.0, radial / np.where(r == 0.0, 1.0, r)[:, None], 0.0)
        rc = np.minimum(r, self.radius)
        out = self.base + axc[:, None] * self.axis + rc[:, None] * rdir
        out[inside] = pts[inside]
        return out[0] if single else out

    def dist(self, x):
        pts, single = _as_points(x)
        proj, _ = _as_points(self.project(pts))
        d = np.linalg.norm(pts - proj, axis=1)
        return d[0] if single else d

    def contains(self, x):
        pts, single = _as_points(x)
        ax, _, r = self.local(pts)
        ok = (ax >= 0.0) & (ax <= self.length) & (r <= self.radius)
        return ok[0] if single else ok

    def sample_inside(self, n, rng):
        a, u, v = self._frame
        t = rng.random(n) * self.length
        r = self.radius * np.sqrt(rng.random(n))
        phi = rng.random(n) * 2.0 * math.pi
        return (
            self.base
            + t[:, None] * a
            + (r * np.cos(phi))[:, None] * u
            + (r * np.sin(phi))[:, None] * v
        )


# ---------------------------------------------------------------------------
# layer-cell regions


def _nudge_above(values, floor):
    return np.maximum(values, np.nextafter(floor, np.inf))


def _nudge_below(values, ceil):
    return np.minimum(values, np.nextafter(ceil, -np.inf))


@dataclass
class SphericalShell:
    """Shell r_lo..r_hi around a center; optional open inner/outer radius."""

    center: np.ndarray
    r_lo: float
    r_hi: float
    open_lo: bool = False
    open_hi: bool = False

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if not 0.0 <= self.r_lo < self.r_hi:
            raise ValueError("shell needs 0 <= r_lo < r_hi")

    def volume(self):
        return 4.0 / 3.0 * math.pi * (self.r_hi**3 - self.r_lo**3)

    def contains(self, pts):
        r = np.linalg.norm(np.atleast_2d(pts) - self.center, axis=1)
        lo_ok = r > self.r_lo if self.open_lo else r >= self.r_lo
        hi_ok = r < self.r_hi if self.open_hi else r <= self.r_hi
        return lo_ok & hi_ok

    def sample(self, n, rng):
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        r = np.cbrt(self.r_lo**3 + rng.random(n) * (self.r_hi**3 - self.r_lo**3))
        if self.open_lo:
            r = _nudge_above(r, self.r_lo)
        return self.center + r[:, None] * d


@dataclass
class BoxRegion:
    """Axis-aligned box region; one face may be marked open (exclusive)."""

    lo: np.ndarray
    hi: np.ndarray
    open_face: tuple | None = None  # (axis, "lo"|"hi")

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if not np.all(self.hi > self.lo):
            raise ValueError("degenerate region: needs hi > lo componentwise")

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        ok = np.all(pts >= self.lo, axis=1) & np.all(pts <= self.hi, axis=1)
        if self.open_face is not None:
            axis, side = self.open_face
            edge = self.lo[axis] if side == "lo" else self.hi[axis]
            ok &= pts[:, axis] != edge
        return ok

    def sample(self, n, rng):
        pts = self.lo + rng.random((n, 3)) * (self.hi - self.lo)
        if self.open_face is not None:
            axis, side = self.open_face
            if side == "lo":
                pts[:, axis] = _nudge_above(pts[:, axis], self.lo[axis])
            else:
                pts[:, axis] = _nudge_below(pts[:, axis], self.hi[axis])
        return pts


@dataclass
class CylinderSection:
    """Axial slice ax_lo..ax_hi and radial band r_lo..r_hi of a cylinder frame."""

    base: np.ndarray
    axis: np.ndarray
    ax_lo: float
    ax_hi: float
    r_lo: float
    r_hi: float
    axial_open: str | None = None  # "lo" | "hi"
    radial_open: str | None = None

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self._frame = orthonormal_frame(self.axis)
        self.axis = self._frame[0]
        if self.ax_hi <= self.ax_lo or self.r_hi <= self.r_lo or self.r_lo < 0.0:
            raise ValueError("degenerate cylinder section")

    def volume(self):
        return math.pi * (self.r_hi**2 - self.r_lo**2) * (self.ax_hi - self.ax_lo)

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        w = pts - self.base
        ax = w @ self.axis
        r = np.linalg.norm(w - ax[:, None] * self.axis, axis=1)
        ax_lo_ok = ax > self.ax_lo if self.axial_open == "lo" else ax >= self.ax_lo
        ax_hi_ok = ax < self.ax_hi if self.axial_open == "hi" else ax <= self.ax_hi
        r_lo_ok = r > self.r_lo if self.radial_open == "lo" else r >= self.r_lo
        r_hi_ok = r < self.r_hi if self.radial_open == "hi" else r <= self.r_hi
        return ax_lo_ok & ax_hi_ok & r_lo_ok & r_hi_ok

    def sample(self, n, rng):
        a, u, v = self._frame
        t = self.ax_lo + rng.random(n) * (self.ax_hi - self.ax_lo)
        if self.axial_open == "lo":
            t = _nudge_above(t, self.ax_lo)
        elif self.axial_open == "hi":
            t = _nudge_below(t, self.ax_hi)
        r = np.sqrt(self.r_lo**2 + rng.random(n) * (self.r_hi**2 - self.r_lo**2))
        if self.radial_open == "lo":
            r = _nudge_above(r, self.r_lo)
        elif self.radial_open == "hi":
            r = _nudge_below(r, self.r_hi)
        phi = rng.random(n) * 2.0 * math.pi
        return (
            self.base
            + t[:, None] * a
            + (r * np.cos(phi))[:, None] * u
            + (r * np.sin(phi))[:, None] * v
        )


# ---------------------------------------------------------------------------
# surfaces and patches


@dataclass
class SphereSurface:
    dom: Sphere

    def area(self):
        return 4.0 * math.pi * self.dom.radius**2

    def sample(self, n, rng):
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        return self.dom.center + self.dom.radius * d, d

    def quad_points(self, n_u=24, n_v=48):
        # Gauss-Legendre in cos(theta) x uniform periodic phi
        z, wz = np.polynomial.legendre.leggauss(n_u)
        phi = (np.arange(n_v) + 0.5) * (2.0 * math.pi / n_v)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1.0 - Z**2)
        pts = self.dom.center + self.dom.radius * np.stack(
            [s * np.cos(P), s * np.sin(P), Z], axis=-1
        ).reshape(-1, 3)
        w = (np.broadcast_to(wz[:, None], Z.shape) * (2.0 * math.pi / n_v)).ravel()
        return pts, w * self.dom.radius**2

    def layer_cell(self, b):
        R = self.dom.radius
        interior = SphericalShell(self.dom.center, R - b, R)
        exterior = SphericalShell(self.dom.center, R, R + b, open_lo=True)
        return interior, exterior

    def extend(self, b):
        return Sphere(self.dom.center, self.dom.radius + b)


@dataclass
class BoxFace:
    dom: Box
    axis: int
    side: int  # -1 for the lo face, +1 for the hi face

    def _other_axes(self):
        return [a for a in range(3) if a != self.axis]

    def area(self):
        e = self.dom.extents()
        a1, a2 = self._other_axes()
        return float(e[a1] * e[a2])

    def normal(self):
        n = np.zeros(3)
        n[self.axis] = float(self.side)
        return n

    def sample(self, n, rng):
        pts = self.dom.lo + rng.random((n, 3)) * self.dom.extents()
        pts[:, self.axis] = self.dom.lo[self.axis] if self.side < 0 else self.dom.hi[self.axis]
        return pts, np.broadcast_to(self.normal(), (n, 3))

    def quad_points(self, n_u=32, n_v=32):
        a1, a2 = self._other_axes()
        x1, w1 = np.polynomial.legendre.leggauss(n_u)
        x2, w2 = np.polynomial.legendre.leggauss(n_v)

        def stretch(x, lo, hi):
            return lo + (x + 1.0) * 0.5 * (hi - lo)

        U, V = np.meshgrid(
            stretch(x1, self.dom.lo[a1], self.dom.hi[a1]),
            stretch(x2, self.dom.lo[a2], self.dom.hi[a2]),
            indexing="ij",
        )
        pts = np.empty(U.shape + (3,))
        pts[..., self.axis] = self.dom.lo[self.axis] if self.side < 0 else self.dom.hi[self.axis]
        pts[..., a1] = U
        pts[..., a2] = V
        e = self.dom.extents()
        w = np.outer(w1, w2).ravel() * (e[a1] * e[a2] / 4.0)
        return pts.reshape(-1, 3), w

    def layer_cell(self, b):
        lo_i, hi_i = self.dom.lo.copy(), self.dom.hi.copy()
        lo_e, hi_e = self.dom.lo.copy(), self.dom.hi.copy()
        if self.side < 0:
            face = self.dom.lo[self.axis]
            hi_i[self.axis] = face + b
            lo_e[self.axis], hi_e[self.axis] = face - b, face
            exterior = BoxRegion(lo_e, hi_e, open_face=(self.axis, "hi"))
        else:
            face = self.dom.hi[self.axis]
            lo_i[self.axis] = face - b
            lo_e[self.axis], hi_e[self.axis] = face, face + b
            exterior = BoxRegion(lo_e, hi_e, open_face=(self.axis, "lo"))
        return BoxRegion(lo_i, hi_i), exterior

    def extend(self, b):
        lo, hi = self.dom.lo.copy(), self.dom.hi.copy()
        if self.side < 0:
            lo[self.axis] -= b
        else:
            hi[self.axis] += b
        return Box(lo, hi)


@dataclass
class CylinderCap:
    """End-cap annulus (r_lo..r_hi) at one end of a cylinder."""

    dom: Cylinder
    end: str  # "lo" (at base) | "hi"
    r_lo: float
    r_hi: float

    def area(self):
        return math.pi * (self.r_hi**2 - self.r_lo**2)

    def _ax_pos(self):
        return 0.0 if self.end == "lo" else self.dom.length

    def normal(self):
        return -self.dom.axis if self.end == "lo" else self.dom.axis.copy()

    def sample(self, n, rng):
        a, u, v = self.dom.frame()
        r = np.sqrt(self.r_lo**2 + rng.random(n) * (self.r_hi**2 - self.r_lo**2))
        phi = rng.random(n) * 2.0 * math.pi
        pts = (
            self.dom.base
            + self._ax_pos() * a
            + (r * np.cos(phi))[:, None] * u
            + (r * np.sin(phi))[:, None] * v
        )
        return pts, np.broadcast_to(self.normal(), (n, 3))

    def quad_points(self, n_u=32, n_v=32):
        a, u, v = self.dom.frame()
        # Gauss in s = r^2 handles the radial Jacobian exactly
        s, ws = np.polynomial.legendre.leggauss(n_u)
        s = self.r_lo**2 + (s + 1.0) * 0.5 * (self.r_hi**2 - self.r_lo**2)
        phi = (np.arange(n_v) + 0.5) * (2.0 * math.pi / n_v)
        S, P = np.meshgrid(s, phi, indexing="ij")
        r = np.sqrt(S)
        pts = (
            self.dom.base
            + self._ax_pos() * a
            + (r * np.cos(P))[..., None] * u
            + (r * np.sin(P))[..., None] * v
        ).reshape(-1, 3)
        # dA = (1/2) ds dphi with s = r^2; Gauss nodes carry (s_hi - s_lo)/2
        w = np.broadcast_to(ws[:, None], S.shape).ravel() * (
            (self.r_hi**2 - self.r_lo**2) / 4.0 * (2.0 * math.pi / n_v)
        )
        return pts, w

    def layer_cell(self, b):
        L = self.dom.length
        if self.end == "lo":
            interior = CylinderSection(self.dom.base, self.dom.axis, 0.0, b, self.r_lo, self.r_hi)
            exterior = CylinderSection(
                self.dom.base, self.dom.axis, -b, 0.0, self.r_lo, self.r_hi, axial_open="hi"
            )
        else:
            interior = CylinderSection(self.dom.base, self.dom.axis, L - b, L, self.r_lo, self.r_hi)
            exterior = CylinderSection(
                self.dom.base, self.dom.axis, L, L + b, self.r_lo, self.r_hi, axial_open="lo"
            )
        return interior, exterior

    def extend(self, b):
        if self.r_lo != 0.0 or self.r_hi != self.dom.radius:
            raise ValueError("only a full end-cap can extend the cylinder")
        if self.end == "lo":
            return Cylinder(
                self.dom.base - b * self.dom.axis, self.dom.axis, self.dom.length + b, self.dom.radius
            )
        return Cylinder(self.dom.base, self.dom.axis, self.dom.length + b, self.dom.radius)


@dataclass
class CylinderLateral:
    dom: Cylinder

    def area(self):
        return 2.0 * math.pi * self.dom.radius * self.dom.length

    def sample(self, n, rng):
        a, u, v = self.dom.frame()
        t = rng.random(n) * self.dom.length
        phi = rng.random(n) * 2.0 * math.pi
        rad = np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v
        pts = self.dom.base + t[:, None] * a + self.dom.radius * rad
        return pts, rad

    def quad_points(self, n_u=32, n_v=32):
        a, u, v = self.dom.frame()
        t, wt = np.polynomial.legendre.leggauss(n_u)
        t = (t + 1.0) * 0.5 * self.dom.length
        phi = (np.arange(n_v) + 0.5) * (2.0 * math.pi / n_v)
        T, P = np.meshgrid(t, phi, indexing="ij")
        rad = np.cos(P)[..., None] * u + np.sin(P)[..., None] * v
        pts = (self.dom.base + T[..., None] * a + self.dom.radius * rad).reshape(-1, 3)
        w = np.broadcast_to(wt[:, None], T.shape).ravel() * (
            self.dom.length / 2.0 * (2.0 * math.pi / n_v) * self.dom.radius
        )
        return pts, w

    def layer_cell(self, b):
        R = self.dom.radius
        interior = CylinderSection(self.dom.base, self.dom.axis, 0.0, self.dom.length, R - b, R)
        exterior = CylinderSection(
            self.dom.base, self.dom.axis, 0.0, self.dom.length, R, R + b, radial_open="lo"
        )
        return interior, exterior

    def extend(self, b):
        return Cylinder(self.dom.base, self.dom.axis, self.dom.length, self.dom.radius + b)


def list_surfaces(dom, outlet_radius=None):
    """Canonical surface partition of a domain boundary.

    Box faces are ordered (-x, +x, -y, +y, -z, +z).  A cylinder lists
    [base cap, far cap, lateral]; with ``outlet_radius`` the far cap is
    split into a central disc and the remaining annulus:
    [base cap, far disc, far annulus, lateral].
    """
    if isinstance(dom, Sphere):
        return [SphereSurface(dom)]
    if isinstance(dom, Box):
        return [BoxFace(dom, axis, side) for axis in range(3) for side in (-1, +1)]
    if isinstance(dom, Cylinder):
        caps = [CylinderCap(dom, "lo", 0.0, dom.radius)]
        if outlet_radius is None:
            caps.append(CylinderCap(dom, "hi", 0.0, dom.radius))
        else:
            if not 0.0 < outlet_radius < dom.radius:
                raise ValueError("outlet radius must lie inside the cap")
            caps.append(CylinderCap(dom, "hi", 0.0, outlet_radius))
            caps.append(CylinderCap(dom, "hi", outlet_radius, dom.radius))
        return caps + [CylinderLateral(dom)]
    raise TypeError(f"unsupported domain {type(dom).__name__}")


DIRICHLET = "dirichlet"
NEUMANN = "neumann"
WALL = "wall"


@dataclass
class Patch:
    pid: int
    surface: object
    kind: str  # dirichlet | neumann | wall

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN, WALL):
            raise ValueError(f"unknown patch kind {self.kind!r}")

    def area(self):
        return self.surface.area()


@dataclass
class LayerCell:
    """Interior/exterior halves of the layer straddling one patch."""

    patch_id: int
    half_thickness: float
    interior: object
    exterior: object


def build_layers(dom, patches, b):
    """One LayerCell per patch, of half-thickness ``b`` on each side of it.

    Cells of adjacent patches may overlap in corner wedges; correctors only
    ever act on the Dirichlet/Neumann cells, which are disjoint in every
    supported configuration.
    """
    if b <= 0.0:
        raise ValueError("layer half-thickness must be positive")
    if b >= dom.inradius():
        raise ValueError(
            f"layer half-thickness {b:g} reaches across the domain "
            f"(inradius {dom.inradius():g}); cells would overlap"
        )
    if b > 0.5 * dom.feature_size():
        log.warning(
            "layer half-thickness %.4g is more than half the smallest feature size %.4g",
            b,
            dom.feature_size(),
        )
    cells = []
    for p in patches:
        interior, exterior = p.surface.layer_cell(b)
        cells.append(LayerCell(p.pid, b, interior, exterior))
    return cells


def penalty_domain(dom, patches, b):
    """Confinement region for the barrier: the domain grown by ``b`` over
    every Dirichlet patch (the exterior buffer must sit behind the barrier);
    walls and flux patches keep the barrier on the boundary itself."""
    out = dom
    for p in patches:
        if p.kind == DIRICHLET:
            surf = type(p.surface)(
                out, *[getattr(p.surface, f) for f in _surface_args(p.surface)]
            )
            out = surf.extend(b)
    return out


def _surface_args(surface):
    if isinstance(surface, BoxFace):
        return ("axis", "side")
    if isinstance(surface, CylinderCap):
        return ("end", "r_lo", "r_hi")
    return ()
