"""Rotationally symmetric model manifolds dr^2 + phi(r)^2 g_{S^{n-1}}.

Curvatures of a warped product::

    radial sectional     K_rad(r) = -phi''/phi
    spherical sectional  K_sph(r) = (1 - phi'^2) / phi^2
    Ric(d_r, d_r)        = (n-1) K_rad
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import NumericalFailure
from .ode_kernels import comparison_pair
from .quadrature import cumulative_gauss, mixed_grid, refine_grid, unit_ball_volume


@dataclass(frozen=True)
class EuclideanWarp:
    horizon: float = math.inf
    kinks = ()

    def value(self, r):
        return np.asarray(r, dtype=float) * 1.0

    def deriv(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def second(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class ComparisonWarp:
    """phi = h1 of a decay profile, so that phi'' = lambda phi exactly."""

    profile: object
    horizon: float = 1e3

    @property
    def kinks(self):
        return self.profile.kinks

    @property
    def _h1(self):
        return comparison_pair(self.profile, self.horizon)[0]

    def value(self, r):
        return self._h1.value(r)

    def deriv(self, r):
        return self._h1.deriv(r)

    def second(self, r):
        return self.profile(r) * self._h1.value(r)


@dataclass(frozen=True, eq=False)
class TabulatedWarp:
    """Warp from a uniform (r, phi) table starting at r = 0.

    First and second derivatives come from centered 4th-order stencils at the
    nodes (one-sided spline values at the two outermost nodes on each end) and
    are spline-interpolated in between.
    """

    r: np.ndarray
    phi: np.ndarray
    _spl: object = field(init=False, repr=False)
    _d1: object = field(init=False, repr=False)
    _d2: object = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if len(r) < 7 or r[0] != 0.0:
            raise ValueError("tabulated warp needs >= 7 rows starting at r = 0")
        h = np.diff(r)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("tabulated warp needs a uniform r grid")
        h = h[0]
        spl = CubicSpline(r, phi)
        d1 = spl(r, 1)
        d2 = spl(r, 2)
        d1[2:-2] = (phi[:-4] - 8 * phi[1:-3] + 8 * phi[3:-1] - phi[4:]) / (12 * h)
        d2[2:-2] = (-phi[:-4] + 16 * phi[1:-3] - 30 * phi[2:-2] + 16 * phi[3:-1] - phi[4:]) / (12 * h * h)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "_spl", spl)
        object.__setattr__(self, "_d1", CubicSpline(r, d1))
        object.__setattr__(self, "_d2", CubicSpline(r, d2))

    kinks = ()

    @property
    def horizon(self):
        return float(self.r[-1])

    @property
    def spacing(self):
        return float(self.r[1] - self.r[0])

    def value(self, r):
        return self._spl(r)

    def deriv(self, r):
        return self._d1(r)

    def second(self, r):
        return self._d2(r)

    @classmethod
    def from_file(cls, path):
        data = np.loadtxt(Path(path), ndmin=2)
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class ModelManifold:
    dimension: int
    warp: object

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
        # tabulated derivatives are only grid-accurate
        tol_v, tol_d = (1e-8, 1e-4) if isinstance(self.warp, TabulatedWarp) else (1e-10, 1e-10)
        if abs(float(self.warp.value(0.0))) > tol_v or abs(float(self.warp.deriv(0.0)) - 1.0) > tol_d:
            raise ValueError("warp must satisfy phi(0) = 0 and phi'(0) = 1")

    @property
    def horizon(self):
        return self.warp.horizon

    @property
    def omega(self):
        """n |B^n|, the area of the unit (n-1)-sphere."""
        return self.dimension * unit_ball_volume(self.dimension)

    def _check_radius(self, r):
        if np.any(np.asarray(r) < 0) or np.any(np.asarray(r) > self.horizon):
            raise ValueError(f"radius outside working domain [0, {self.horizon}]")

    def density(self, r):
        """phi^(n-1), the radial volume density up to n|B^n|."""
        return self.warp.value(r) ** (self.dimension - 1)

    def sphere_area(self, r):
        self._check_radius(r)
        return self.omega * self.density(r)

    def ball_volume(self, r):
        self._check_radius(r)
        if r == 0:
            return 0.0
        val, err = integrate.quad(lambda s: float(self.density(s)), 0.0, r, epsabs=0.0, epsrel=1e-12,
                                  limit=200, points=[k for k in self.warp.kinks if 0 < k < r] or None)
        if err > 1e-10 * abs(val):
            raise NumericalFailure(f"ball volume quadrature did not converge at r={r}")
        return self.omega * val

    def ball_volumes(self, radii):
        """Volumes for an increasing radius grid (cumulative Gauss-Legendre)."""
        radii = np.asarray(radii, dtype=float)
        self._check_radius(radii)
        grid = refine_grid(np.concatenate([[0.0], radii]), self.warp.kinks)
        cum = cumulative_gauss(self.density, grid)
        return self.omega * np.interp(radii, grid, cum)

    def radial_curvature(self, r):
        """-phi''/phi, taken at a tiny positive radius in place of the 0/0 at r = 0."""
        floor = self.warp.spacing if isinstance(self.warp, TabulatedWarp) else 1e-8
        r = np.maximum(np.asarray(r, dtype=float), floor)
        out = -self.warp.second(r) / self.warp.value(r)
        return out if np.ndim(out) else float(out)

    def spherical_curvature(self, r):
        phi = self.warp.value(r)
        return (1.0 - self.warp.deriv(r) ** 2) / phi ** 2


@dataclass(frozen=True)
class CurvatureCheck:
    passed: bool
    worst_margin: float
    worst_radius: float
    first_violation: float | None
    tangential_margin: float | None = None


@dataclass(frozen=True)
class AvrEstimate:
    theta: float
    horizon: float
    monotone_violation: float
    drift: float


def euclidean(n, horizon=math.inf):
    return ModelManifold(n, EuclideanWarp(horizon))


def comparison_model(n, profile, horizon=1e3):
    return ModelManifold(n, ComparisonWarp(profile, horizon))


def ricci_decay_check(m, p, R=None, variant="ricci", samples=2000, tol=1e-10):
    """Check the curvature-decay hypothesis on (0, R].

    ``variant="ricci"`` checks Ric(d_r, d_r) >= -(n-1) lambda, the direction
    that matters for radial geodesics.  The tangential Ricci margin
    -phi''/phi + (n-2) K_sph + (n-1) lambda is reported alongside; pass
    ``variant="full-ricci"`` to require it as well.  ``variant="sectional"``
    checks both sectional curvatures against -lambda.
    """
    R = m.horizon if R is None else R
    if not math.isfinite(R):
        raise ValueError("R must be finite")
    r = mixed_grid(0.0, R, samples)[1:]
    lam = np.asarray(p(r))
    k_rad = m.radial_curvature(r)
    margin = lam + k_rad
    n = m.dimension
    k_sph = m.spherical_curvature(r)
    tangential = k_rad + (n - 2) * k_sph + (n - 1) * lam
    if variant == "sectional":
        margin = np.minimum(margin, lam + k_sph)
    elif variant == "full-ricci":
        margin = np.minimum(margin, tangential / (n - 1))
    elif variant != "ricci":
        raise ValueError(f"unknown variant {variant!r}")
    scale = 1.0
    if isinstance(m.warp, TabulatedWarp):
        scale = 1e4 * m.warp.spacing ** 2 / tol
    bad = np.flatnonzero(margin < -tol * scale * np.maximum(1.0, lam))
    k = int(np.argmin(margin))
    return CurvatureCheck(
        passed=not len(bad),
        worst_margin=float(margin[k]),
        worst_radius=float(r[k]),
        first_violation=float(r[bad[0]]) if len(bad) else None,
        tangential_margin=float(tangential.min() / (n - 1)),
    )


@functools.lru_cache(maxsize=64)
def _denominator_integrals(profile, n, radii_key):
    radii = np.asarray(radii_key)
    h1 = comparison_pair(profile, float(radii[-1]))[0]
    grid = refine_grid(np.concatenate([[0.0], radii]), profile.kinks)
    cum = cumulative_gauss(lambda s: h1.value(s) ** (n - 1), grid)
    return np.interp(radii, grid, cum)


def bishop_gromov_ratio(m, p, radii=None, horizon=None):
    """Volume ratio |B(r)| / (n|B^n| int_0^r h1^{n-1}) on a radius grid.

    Returns ``(radii, ratios, AvrEstimate)``.  theta is the ratio at the
    largest radius; ``drift`` is its decrease over the last decade, which
    bounds how far the horizon value sits above the limit.
    """
    if radii is None:
        R = horizon if horizon is not None else m.horizon
        radii = np.geomspace(1e-3, R, 600)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and increasing")
    n = m.dimension
    num = m.ball_volumes(radii) / m.omega
    den = _denominator_integrals(p, n, tuple(radii.tolist()))
    ratio = num / den
    violation = float(max(0.0, np.max(np.diff(ratio)))) if len(ratio) > 1 else 0.0
    R = radii[-1]
    ref = np.interp(R / 10, radii, ratio) if R / 10 >= radii[0] else ratio[0]
    est = AvrEstimate(theta=float(ratio[-1]), horizon=float(R), monotone_violation=violation,
                      drift=float(ref - ratio[-1]))
    return radii, ratio, est
