"""Radially symmetric reproduction of the ABP transport argument.

Pipeline on a geodesic ball Omega = B(o, a) of a model manifold:

1. rescale f so the Neumann problem is compatible, then solve it radially;
2. check the Laplacian bound on U = {0 < |u'| < 1};
3. push U forward along u' for time r and test the contact condition;
4. check that the contact images cover the annulus a < rho < r - a;
5. bound the transport Jacobian by the comparison functions and integrate
   the whole inequality chain over the contact set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .comparison_suite import expm1_over, model_curvature_matrix
from .ode_kernels import comparison_pair, psi_pair, solve_jacobi_matrix
from .profiles import profile_invariants, scale_profile
from .quadrature import _GL_NODES, _GL_WEIGHTS, cumulative_gauss, gauss_panels

BOUNDARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class NeumannSolution:
    """Radial solution of div(f Du) = n f^{n/(n-1)} - 2(n-1) b1 f - |Df|, u'(a) = 1."""

    ball_radius: float
    grid: np.ndarray
    u_prime: np.ndarray
    u: np.ndarray
    f_scale: float
    f: object  # scaled test function
    model: object
    b1: float
    boundary_error: float
    _flux: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.model.dimension

    @property
    def compatible(self):
        return self.boundary_error <= BOUNDARY_TOL

    def source(self, r):
        """Right-hand side of the Neumann equation."""
        n, f = self.n, self.f
        fv = f.value(r)
        return n * fv ** (n / (n - 1)) - 2 * (n - 1) * self.b1 * fv - np.abs(f.deriv(r))

    def _flux_at(self, r):
        """int_0^r source * phi^{n-1}, continued from the nearest grid node."""
        r = np.asarray(r, dtype=float)
        k = np.clip(np.searchsorted(self.grid, r, side="right") - 1, 0, len(self.grid) - 1)
        lo = self.grid[k]
        dens = lambda s: self.source(s) * self.model.density(s)
        return self._flux[k] + gauss_panels(dens, lo, r)

    def u_prime_at(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        denom = self.model.density(safe) * self.f.value(safe)
        return np.where(r > 0, self._flux_at(safe) / denom, 0.0)

    def u_at(self, r):
        r = np.asarray(r, dtype=float)
        k = np.clip(np.searchsorted(self.grid, r, side="right") - 1, 0, len(self.grid) - 1)
        return self.u[k] + gauss_panels(self.u_prime_at, self.grid[k], r)

    def laplacian_at(self, r):
        """Delta u = (source - f' u') / f, from the equation rather than differencing."""
        f = self.f
        return (self.source(r) - f.deriv(r) * self.u_prime_at(r)) / f.value(r)

    def u_second_at(self, r):
        w = self.model.warp
        return self.laplacian_at(r) - (self.n - 1) * w.deriv(r) / w.value(r) * self.u_prime_at(r)


def solve_neumann_radial(m, p, a, f, grid_size=2001, b1=None):
    """Scale ``f`` to satisfy the compatibility identity and solve for u(r)."""
    if not 0 < a <= m.horizon:
        raise ValueError("ball radius outside the model's working domain")
    f.require_positive(a)
    n = m.dimension
    b1 = profile_invariants(p).b1 if b1 is None else b1
    grid = np.linspace(0.0, a, grid_size)

    def radial(func):
        return m.omega * cumulative_gauss(lambda s: func(s) * m.density(s), grid)[-1]

    lhs = float(f.value(a)) * float(m.sphere_area(a)) + radial(lambda s: np.abs(f.deriv(s))) \
        + 2 * (n - 1) * b1 * radial(f.value)
    power = n * radial(lambda s: f.value(s) ** (n / (n - 1)))
    scale = (lhs / power) ** (n - 1)
    fs = f.scaled(scale)

    def src(s):
        fv = fs.value(s)
        return (n * fv ** (n / (n - 1)) - 2 * (n - 1) * b1 * fv - np.abs(fs.deriv(s))) * m.density(s)

    flux = cumulative_gauss(src, grid)
    partial = NeumannSolution(a, grid, np.zeros_like(grid), np.zeros_like(grid), scale, fs, m, b1, 0.0, flux)
    up = partial.u_prime_at(grid)
    u = cumulative_gauss(partial.u_prime_at, grid)
    err = abs(up[-1] - 1.0)
    return NeumannSolution(a, grid, up, u, scale, fs, m, b1, float(err), flux)


def hessian_bound_check(sol, samples=None):
    """min over {0 < u' < 1} of f^{1/(n-1)} - 2(n-1)b1/n - Delta u / n.

    Returns ``(worst_slack, location)``.
    """
    n = sol.n
    r = sol.grid[1:-1] if samples is None else np.asarray(samples)
    up = sol.u_prime_at(r)
    keep = (up > 0) & (up < 1)
    r = r[keep]
    slack = sol.f.value(r) ** (1.0 / (n - 1)) - 2 * (n - 1) * sol.b1 / n - sol.laplacian_at(r) / n
    k = int(np.argmin(slack))
    return float(slack[k]), float(r[k])


@dataclass(frozen=True, eq=False)
class TransportState:
    r: float
    source_samples: np.ndarray
    image_radii: np.ndarray
    contact_flags: np.ndarray
    jacobians: np.ndarray
    contact_margin: np.ndarray
    epsilon: float

    @property
    def contact_radii(self):
        return self.source_samples[self.contact_flags]

    def with_contacts(self, flags):
        """Copy with replaced contact flags (used to build failure fixtures)."""
        return TransportState(self.r, self.source_samples, self.image_radii, np.asarray(flags, dtype=bool),
                              self.jacobians, self.contact_margin, self.epsilon)


def radial_jacobian(sol, s, t):
    """det D Phi_t at radius s: (1 + t u'') (phi(s + t u') / phi(s))^{n-1}."""
    w = sol.model.warp
    up = sol.u_prime_at(s)
    return (1.0 + t * sol.u_second_at(s)) * (w.value(s + t * up) / w.value(s)) ** (sol.n - 1)


def transport_radial(sol, m, r, samples=801, competitors=801, epsilon=None, contact_tol=1e-10):
    """Push {0 < u' < 1} forward along Du for time r and flag contact points.

    A sample s is in the contact set when t = s minimizes
    r u(t) + (rho(s) - t)^2 / 2 over the ball; for radial u the same-ray
    competitor is the closest, so the search is one-dimensional.
    """
    a = sol.ball_radius
    if m.horizon < a + r:
        raise ValueError(f"model horizon {m.horizon} must reach a + r = {a + r}")
    if np.any(sol.u_prime < -1e-14):
        raise ValueError("u' < 0 somewhere: only outward radial transport is supported")
    eps = epsilon if epsilon is not None else a / (samples - 1)
    s = np.linspace(eps, a, samples)
    up = sol.u_prime_at(s)
    s = s[(up > 0) & (up < 1)]
    up = sol.u_prime_at(s)
    rho = s + r * up

    t = np.linspace(0.0, a, competitors)
    ut = sol.u_at(t)
    us = sol.u_at(s)
    own = r * us + 0.5 * (r * up) ** 2
    G = r * ut[None, :] + 0.5 * (rho[:, None] - t[None, :]) ** 2 - own[:, None]
    j = np.argmin(G, axis=1)
    margin = G[np.arange(len(s)), j]
    scale = r * max(1.0, float(np.max(np.abs(ut)))) + 0.5 * float(np.max(rho)) ** 2
    for i in np.flatnonzero(margin < contact_tol * scale * 100):
        lo, hi = t[max(j[i] - 1, 0)], t[min(j[i] + 1, len(t) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda x: float(r * sol.u_at(x) + 0.5 * (rho[i] - x) ** 2 - own[i]),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            margin[i] = min(margin[i], res.fun)
    flags = margin >= -contact_tol * scale
    jac = radial_jacobian(sol, s, r)
    return TransportState(float(r), s, rho, flags, jac, margin, float(eps))


def target_annulus(a, r, count=400):
    """Radii strictly inside (a, r - a); empty when r <= 2a."""
    if r - a <= a:
        return np.empty(0)
    return np.linspace(a, r - a, count + 2)[1:-1]


def covering_check(ts, m, a, r, grid=None):
    """Target radii in (a, r - a) with no contact image within one grid cell."""
    targets = target_annulus(a, r) if grid is None else np.asarray(grid, dtype=float)
    if not len(targets):
        return []
    cell = (r - 2 * a) / (len(targets) + 1) if len(targets) > 1 else r - 2 * a
    images = np.sort(ts.image_radii[ts.contact_flags])
    if not len(images):
        return [float(x) for x in targets]
    k = np.clip(np.searchsorted(images, targets), 1, len(images) - 1)
    near = np.minimum(np.abs(images[k] - targets), np.abs(images[k - 1] - targets))
    inside = (targets >= images[0] - cell) & (targets <= images[-1] + cell)
    return [float(x) for x in targets[(near > cell) | ~inside]]


@dataclass(frozen=True)
class JacobianCheck:
    worst_slack: float
    location: tuple
    conjugate_geodesics: int
    annulus_volume: float
    det_integral: float
    bound_integral: float
    chain_integral: float
    matrix_crosscheck: float

    def chain_ok(self, rtol=1e-6):
        return (self.annulus_volume <= self.det_integral * (1 + rtol)
                and self.det_integral <= self.bound_integral * (1 + rtol)
                and self.bound_integral <= self.chain_integral * (1 + rtol))


def _psi_at(p, sol, s, T):
    psi1, psi2 = psi_pair(scale_profile(p, float(sol.u_prime_at(s)), float(s)), T)
    return psi1, psi2


def _contact_intervals(ts):
    """Maximal runs of consecutive contact samples as (lo, hi) radius pairs."""
    f = ts.contact_flags.astype(int)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], f, [0]])))
    return [(ts.source_samples[i], ts.source_samples[j - 1]) for i, j in zip(edges[::2], edges[1::2]) if j - 1 > i]


def jacobian_bound_check(ts, p, sol, geodesics=24, times=41, panels=6, crosscheck=3):
    """Jacobian bound along sampled geodesics plus the integrated inequality chain.

    Chain (all over the contact set, in model volume)::

        |annulus| <= int det D Phi_r <= int (1 + r u'') psi(r)^{n-1}
                  <= int (1/(nr) + (n-1)/n psi2/psi1 + Delta u/n)^n
                         ((e^{a b1}-1)/b1 h2/h1 + e^{a b1})^{n-1} r h1^{n-1}
    """
    m = sol.model
    n = sol.n
    a = sol.ball_radius
    r = ts.r
    b1 = sol.b1
    contact = ts.contact_radii
    if not len(contact):
        raise ValueError("contact set is empty")

    # pointwise bound on a sample of geodesics
    pick = contact[np.unique(np.linspace(0, len(contact) - 1, geodesics).astype(int))]
    tt = np.linspace(0.0, r, times)
    worst, where, conj = math.inf, (math.nan, math.nan), 0
    for s in pick:
        psi1, psi2 = _psi_at(p, sol, s, r)
        q11 = float(sol.u_second_at(s))
        g0 = float(m.warp.deriv(s) / m.warp.value(s) * sol.u_prime_at(s))
        det = radial_jacobian(sol, s, tt)
        if np.any(det[:-1] <= 0):
            conj += 1
            continue
        bound = (1.0 + tt * q11) * (psi2(tt) + g0 * psi1(tt)) ** (n - 1)
        slack = (bound - det) / np.maximum(1.0, np.abs(bound))
        k = int(np.argmin(slack))
        if slack[k] < worst:
            worst, where = float(slack[k]), (float(s), float(tt[k]))

    # independent route: matrix Jacobi system along a few geodesics
    cross = 0.0
    for s in pick[np.unique(np.linspace(0, len(pick) - 1, crosscheck).astype(int))]:
        up = float(sol.u_prime_at(s))
        S = model_curvature_matrix(m, up, float(s))
        g0 = float(m.warp.deriv(s) / m.warp.value(s) * up)
        P0p = np.diag([float(sol.u_second_at(s))] + [g0] * (n - 1))
        jm = solve_jacobi_matrix(S, np.eye(n), P0p, r, samples=tt)
        ref = radial_jacobian(sol, s, tt)
        cross = max(cross, float(np.max(np.abs(jm.detP - ref) / np.maximum(1.0, np.abs(ref)))))

    # integrated chain over contact intervals
    h1, h2 = comparison_pair(p, r)
    hr = float(h2(r) / h1(r))
    coef = expm1_over(b1, a) * hr + math.exp(a * b1)
    tail = coef ** (n - 1) * r * float(h1(r)) ** (n - 1)

    def integrands(svals):
        det = radial_jacobian(sol, svals, r)
        bnd = np.empty_like(svals)
        chain = np.empty_like(svals)
        lap = sol.laplacian_at(svals)
        q11 = sol.u_second_at(svals)
        g0 = m.warp.deriv(svals) / m.warp.value(svals) * sol.u_prime_at(svals)
        for i, s in enumerate(svals):
            psi1, psi2 = _psi_at(p, sol, s, r)
            bnd[i] = (1.0 + r * q11[i]) * (psi2(r) + g0[i] * psi1(r)) ** (n - 1)
            chain[i] = (1.0 / (n * r) + (n - 1) / n * psi2(r) / psi1(r) + lap[i] / n) ** n * tail
        dens = m.density(svals)
        return det * dens, bnd * dens, chain * dens

    totals = np.zeros(3)
    for lo, hi in _contact_intervals(ts):
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
        vals = integrands(x)
        w = (half[:, None] * _GL_WEIGHTS).ravel()
        totals += np.array([np.dot(v, w) for v in vals])
    totals *= m.omega

    annulus = m.ball_volume(r - a) - m.ball_volume(a) if r > 2 * a else 0.0
    return JacobianCheck(worst, where, conj, float(annulus), *map(float, totals), cross)
