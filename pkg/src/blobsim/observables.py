"""Run diagnostics and the convergence machinery.

``mass_inside``/``polar_inertia`` gauge the particle measure against the
analysis domain (the exterior buffer never counts).  Time-integral norms
use the left-endpoint rule over the recorded steps -- they are the weakly
convergent scalars whose errors the power-law fitter extrapolates.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


def mass_inside(ps, dom):
    """Total mass of the particles inside the domain."""
    if ps.n == 0:
        return 0.0
    return ps.mass * int(np.count_nonzero(dom.contains(ps.pos)))


def polar_inertia(ps, center, dom=None):
    """Second moment sum r^2 m about a reference point.

    Restricted to particles inside ``dom`` when given, otherwise over the
    whole set (the convention for time-norm sums, which must see all mass).
    """
    if ps.n == 0:
        return 0.0
    pos = ps.pos
    if dom is not None:
        pos = pos[dom.contains(pos)]
    if pos.shape[0] == 0:
        return 0.0
    w = pos - np.asarray(center, dtype=float)
    return ps.mass * float(np.einsum("ij,ij->", w, w))


def l1_norm(values, dt):
    """Time integral of a stepwise-sampled observable: dt * sum(values).

    ``values`` are the left endpoints of the integration intervals.
    """
    return float(dt) * float(np.sum(np.asarray(values, dtype=float)))


def steady_mean(times, values, fraction=0.2):
    """Mean of an observable over the trailing fraction of the run."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_cut = times[-1] - fraction * (times[-1] - times[0])
    sel = times >= t_cut
    return float(values[sel].mean())


class TimeSeries:
    """Per-step observable records of one run.

    Stores counts and inertia both restricted to the domain (the reported
    observables) and over all particles including the exterior buffers
    (the convention the time-norm sums require).
    """

    COLUMNS = ("step", "time", "n_total", "n_inside", "mass_inside", "mass_total", "polar_inertia")

    def __init__(self, mass):
        self.mass = float(mass)
        self.step = []
        self.time = []
        self.n_total = []
        self.n_inside = []
        self.j_inside = []
        self.j_all = []

    def append(self, step, time, n_total, n_inside, j_inside, j_all):
        if self.time and time <= self.time[-1]:
            raise ValueError("time series must be strictly increasing in time")
        self.step.append(int(step))
        self.time.append(float(time))
        self.n_total.append(int(n_total))
        self.n_inside.append(int(n_inside))
        self.j_inside.append(float(j_inside))
        self.j_all.append(float(j_all))

    def __len__(self):
        return len(self.time)

    @property
    def times(self):
        return np.asarray(self.time, dtype=float)

    @property
    def mass_inside(self):
        return self.mass * np.asarray(self.n_inside, dtype=float)

    @property
    def mass_total(self):
        return self.mass * np.asarray(self.n_total, dtype=float)

    def l1(self, field):
        """Left-endpoint time norm of a column over the recorded span.

        Sums every record except the final one, weighted by the uniform
        step; totals (all particles) are the columns meant for this.
        """
        values = np.asarray(getattr(self, field), dtype=float)
        if len(self.time) < 2:
            return 0.0
        dt = (self.time[-1] - self.time[0]) / (len(self.time) - 1)
        return l1_norm(values[:-1], dt)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for k in range(len(self.time)):
                w.writerow(
                    [
                        self.step[k],
                        _fmt(self.time[k]),
                        self.n_total[k],
                        self.n_inside[k],
                        _fmt(self.n_inside[k] * self.mass),
                        _fmt(self.n_total[k] * self.mass),
                        _fmt(self.j_inside[k]),
                    ]
                )


@dataclass
class FitReport:
    """Power-law extrapolation Q(m) = q_inf + a * m**alpha of a sweep."""

    quantity: str
    q_inf: float
    a: float
    alpha: float
    residual: float
    errors: np.ndarray = field(repr=False)
    identifiable: bool = True


def fit_power_law(masses, values, quantity="Q", alpha_lo=0.05, alpha_hi=1.5):
    """Least-squares fit of q_inf + a * m**alpha.

    Golden-section search on alpha with an exact linear solve for
    (q_inf, a) at each candidate: deterministic, order-independent, and
    exact on noiseless power-law data.  Constant data is flagged
    unidentifiable instead of fitted.
    """
    m = np.asarray(masses, dtype=float)
    q = np.asarray(values, dtype=float)
    if m.size < 4:
        raise ValueError("power-law fit needs at least 4 points")
    if np.unique(m).size != m.size:
        raise ValueError("power-law fit needs distinct particle masses")
    if np.any(m <= 0.0):
        raise ValueError("particle masses must be positive")
    order = np.argsort(m)
    m, q = m[order], q[order]

    scale = float(np.max(np.abs(q))) or 1.0
    if float(np.ptp(q)) <= 1e-12 * scale:
        return FitReport(quantity, float(q.mean()), 0.0, math.nan, 0.0,
                         np.abs(q - q.mean()), identifiable=False)

    def solve(alpha):
        A = np.column_stack([np.ones_like(m), m**alpha])
        coef, _, _, _ = np.linalg.lstsq(A, q, rcond=None)
        r = q - A @ coef
        return float(r @ r), coef

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a_, b_ = alpha_lo, alpha_hi
    c_ = b_ - invphi * (b_ - a_)
    d_ = a_ + invphi * (b_ - a_)
    fc, _ = solve(c_)
    fd, _ = solve(d_)
    for _ in range(90):
        if fc < fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - invphi * (b_ - a_)
            fc, _ = solve(c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + invphi * (b_ - a_)
            fd, _ = solve(d_)
    alpha = (a_ + b_) / 2.0
    ssr, (q_inf, amp) = solve(alpha)
    return FitReport(quantity, float(q_inf), float(amp), float(alpha),
                     math.sqrt(ssr), np.abs(q - q_inf))


def write_fit_reports(path, reports):
    """fit_report.csv: quantity,Q_inf,a,alpha,residual."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "Q_inf", "a", "alpha", "residual"])
        for r in reports:
            w.writerow([r.quantity, _fmt(r.q_inf), _fmt(r.a), _fmt(r.alpha), _fmt(r.residual)])


def _fmt(v):
    return format(float(v), ".17e")
