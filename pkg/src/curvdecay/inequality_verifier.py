"""Sobolev/isoperimetric constants and their verification on model geometries."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .comparison_suite import SERIES_CUTOFF, growth_limit
from .errors import NumericalFailure
from .model_manifold import bishop_gromov_ratio
from .profiles import profile_invariants
from .quadrature import sphere_area, unit_ball_volume
from .report import VerificationReport

EQUALITY_TOL = 1e-8
INEQUALITY_TOL = 1e-8


@dataclass(frozen=True)
class InequalityParams:
    n: int
    theta: float
    B: float
    b1: float
    r0: float
    p: int | None = None

    def __post_init__(self):
        vals = (self.theta, self.B, self.b1, self.r0)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        if not 0.0 <= self.theta <= 1.0 + 1e-10:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if min(self.B, self.b1, self.r0) < 0:
            raise ValueError("B, b1 and r0 must be nonnegative")


@dataclass(frozen=True)
class RadialTestFunction:
    """Positive radial function f(r).

    kinds: ``constant`` (c,), ``affine`` (a, b) for a - b r, ``bump``
    (base, amp, width) for base + amp exp(-(r/width)^2).
    """

    kind: str
    params: tuple
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        need = {"constant": 1, "affine": 2, "bump": 3}
        if self.kind not in need or len(self.params) != need[self.kind]:
            raise ValueError(f"bad test function {self.kind}{self.params}")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            v = np.full_like(r, p[0])
        elif k == "affine":
            v = p[0] - p[1] * r
        else:
            v = p[0] + p[1] * np.exp(-((r / p[2]) ** 2))
        return self.scale * v

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            d = np.zeros_like(r)
        elif k == "affine":
            d = np.full_like(r, -p[1])
        else:
            d = -2.0 * p[1] * r / p[2] ** 2 * np.exp(-((r / p[2]) ** 2))
        return self.scale * d

    def scaled(self, s):
        return RadialTestFunction(self.kind, self.params, self.scale * s)

    def require_positive(self, radius):
        r = np.linspace(0.0, radius, 2001)
        if np.min(self.value(r)) <= 0:
            raise ValueError(f"test function {self.kind}{self.params} is not positive on the closed ball")


@dataclass(frozen=True)
class SubmanifoldSpec:
    kind: str  # flat_disk | round_sphere
    n: int
    p: int

    def __post_init__(self):
        if self.kind not in ("flat_disk", "round_sphere"):
            raise ValueError(f"unknown submanifold kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")

    @property
    def area(self):
        return unit_ball_volume(self.n) if self.kind == "flat_disk" else sphere_area(self.n)

    @property
    def boundary_area(self):
        return sphere_area(self.n - 1) if self.kind == "flat_disk" else 0.0

    @property
    def mean_curvature(self):
        return 0.0 if self.kind == "flat_disk" else float(self.n)


def sobolev_constant_domain(q):
    n = q.n
    denom = growth_limit(q.B) * (2.0 * math.exp(q.r0 * q.b1) - 1.0) ** (n - 1)
    return n * (unit_ball_volume(n) * q.theta / denom) ** (1.0 / n)


def b1_damping(b1):
    """2 b1 / (e^{2 b1} - 1), continuous at b1 = 0 with value 1."""
    x = 2.0 * b1
    if b1 < SERIES_CUTOFF:
        return 1.0 - 0.5 * x
    return x / math.expm1(x)


def sobolev_constant_submanifold(q):
    if q.p is None or q.p < 2:
        raise ValueError("the submanifold constant needs codimension p >= 2")
    n, p = q.n, q.p
    num = b1_damping(q.b1) * (n + p) * unit_ball_volume(n + p) * q.theta
    den = p * unit_ball_volume(p) * (2.0 * math.exp(q.r0 * q.b1) - 1.0) ** (n + p - 1) * growth_limit(q.B)
    return n * (num / den) ** (1.0 / n)


@functools.lru_cache(maxsize=64)
def avr_estimate(m, p, horizon=1e3):
    """theta for the pair (m, p) from the Bishop-Gromov ratio at ``horizon``."""
    R = min(horizon, m.horizon)
    return bishop_gromov_ratio(m, p, np.geomspace(1e-3, R, 600))[2]


def _radial_integral(m, func, a):
    """n|B^n| int_0^a func(r) phi(r)^{n-1} dr."""
    pts = [k for k in m.warp.kinks if 0 < k < a] or None
    val, err = integrate.quad(lambda s: float(func(s) * m.density(s)), 0.0, a, epsabs=1e-15,
                              epsrel=1e-12, limit=200, points=pts)
    if err > 1e-9 * max(abs(val), 1e-300) and err > 1e-14:
        raise NumericalFailure(f"radial quadrature did not converge on [0, {a}]")
    return m.omega * val


def domain_params(m, p, ball_radius, horizon=1e3):
    inv = profile_invariants(p)
    est = avr_estimate(m, p, horizon)
    theta = min(est.theta, 1.0)
    return InequalityParams(m.dimension, theta, inv.B, inv.b1, ball_radius), est


def isoperimetric_check(m, p, ball_radius, horizon=1e3, tol=INEQUALITY_TOL, scenario_id=""):
    """|dOmega| >= (C - 2(n-1) b1 |Omega|^{1/n}) |Omega|^{(n-1)/n} on a geodesic ball at o."""
    q, est = domain_params(m, p, ball_radius, horizon)
    n = q.n
    C = sobolev_constant_domain(q)
    vol = m.ball_volume(ball_radius)
    area = float(m.sphere_area(ball_radius))
    rhs = (C - 2 * (n - 1) * q.b1 * vol ** (1.0 / n)) * vol ** ((n - 1) / n)
    margin = area - rhs
    computed = {"B": q.B, "b1": q.b1, "theta": q.theta, "r0": q.r0, "constant": C, "volume": vol,
                "lhs": area, "rhs": rhs, "margin": margin, "horizon": est.horizon}
    return VerificationReport.from_margins(
        scenario_id, {"n": n, "ball_radius": ball_radius}, computed, {"margin": (margin, tol * max(1.0, area))},
        {"inequality": tol})


def sobolev_sides(m, p, ball_radius, f, horizon=1e3):
    q, est = domain_params(m, p, ball_radius, horizon)
    n = q.n
    f.require_positive(ball_radius)
    C = sobolev_constant_domain(q)
    boundary = float(f.value(ball_radius)) * float(m.sphere_area(ball_radius))
    grad = _radial_integral(m, lambda s: abs(f.deriv(s)), ball_radius)
    mass = _radial_integral(m, f.value, ball_radius)
    lhs = boundary + grad + 2 * (n - 1) * q.b1 * mass
    power = _radial_integral(m, lambda s: f.value(s) ** (n / (n - 1)), ball_radius)
    rhs = C * power ** ((n - 1) / n)
    return q, est, C, lhs, rhs


def sobolev_check_domain(m, p, ball_radius, f, horizon=1e3, tol=INEQUALITY_TOL, scenario_id=""):
    q, est, C, lhs, rhs = sobolev_sides(m, p, ball_radius, f, horizon)
    margin = lhs - rhs
    computed = {"B": q.B, "b1": q.b1, "theta": q.theta, "r0": q.r0, "constant": C, "lhs": lhs, "rhs": rhs,
                "margin": margin, "horizon": est.horizon}
    return VerificationReport.from_margins(
        scenario_id, {"n": q.n, "ball_radius": ball_radius, "f": [f.kind, *f.params]}, computed,
        {"margin": (margin, tol * max(1.0, lhs))}, {"inequality": tol})


def submanifold_check_flat(s, f_const, tol=INEQUALITY_TOL, scenario_id=""):
    """Submanifold inequality for a unit flat disk or unit round sphere in R^{n+p}."""
    if f_const <= 0:
        raise ValueError("f must be positive")
    q = InequalityParams(s.n, 1.0, 0.0, 0.0, 1.0, s.p)
    C = sobolev_constant_submanifold(q)
    n = s.n
    lhs = f_const * s.boundary_area + f_const * s.mean_curvature * s.area + (2 * n * q.b1 + 1) * f_const * s.area
    rhs = C * (f_const ** (n / (n - 1)) * s.area) ** ((n - 1) / n)
    margin = lhs - rhs
    computed = {"constant": C, "area": s.area, "boundary_area": s.boundary_area, "lhs": lhs, "rhs": rhs,
                "margin": margin}
    return VerificationReport.from_margins(
        scenario_id, {"kind": s.kind, "n": n, "p": s.p, "f": f_const}, computed,
        {"margin": (margin, tol * max(1.0, lhs))}, {"inequality": tol})
