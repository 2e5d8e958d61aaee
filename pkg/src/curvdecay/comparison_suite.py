"""Falsifiable numerical checks of the comparison lemmas.

Each check returns a :class:`LemmaCheckResult` whose ``worst_slack`` is the
minimum of (right-hand side - left-hand side) over its sample grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model_manifold import comparison_model
from .ode_kernels import comparison_pair, psi_pair, solve_jacobi_matrix, solve_shifted
from .profiles import make_profile, profile_invariants, scale_profile

log = logging.getLogger(__name__)

LEMMA_IDS = ("shifted_bound", "growth_exponent", "shift_ratio", "psi_ratio", "h2h1_limit", "det_bound")
SLACK_TOL = 1e-8
ASYMPTOTIC_RTOL = 0.01
SERIES_CUTOFF = 1e-12


@dataclass(frozen=True)
class LemmaCheckResult:
    lemma_id: str
    worst_slack: float
    location: float
    passed: bool
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_slack(cls, lemma_id, slack, location, tolerance, **details):
        slack = float(slack)
        return cls(lemma_id, slack, float(location), bool(slack >= -tolerance), float(tolerance), details)


def growth_limit(B):
    """(1 + sqrt(1 + 4B)) / 2, the power-law exponent of h1 for t^2 lambda -> B."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * B))


def expm1_over(x, scale):
    """(e^{scale*x} - 1)/x with its removable singularity at x = 0."""
    if x < SERIES_CUTOFF:
        return scale * (1.0 + 0.5 * scale * x)
    return math.expm1(scale * x) / x


def geometric_grid(T, n=400, extra=()):
    g = np.concatenate([[0.0], np.geomspace(min(1e-4, T / 10), T, n), np.linspace(0, T, n // 4), list(extra)])
    return np.unique(g[(g >= 0) & (g <= T)])


def check_shifted_bound(p, r, r0, T, tol=SLACK_TOL, inv=None):
    """f(t) <= (e^{r0 b1} - 1)/b1 h2(t) + e^{r0 b1} h1(t) for the shifted solution f."""
    if not 0.0 <= r <= r0:
        raise ValueError(f"need 0 <= r <= r0, got r={r}, r0={r0}")
    b1 = (inv or profile_invariants(p)).b1
    f = solve_shifted(p, r, T)
    h1, h2 = comparison_pair(p, T)
    t = geometric_grid(T, extra=[r])
    bound = expm1_over(b1, r0) * h2(t) + math.exp(r0 * b1) * h1(t)
    slack = bound - f(t)
    k = int(np.argmin(slack))
    return LemmaCheckResult.from_slack("shifted_bound", slack[k], t[k], tol, r=r, r0=r0, b1=b1)


def check_growth_exponent(p, T=1e4, rtol=ASYMPTOTIC_RTOL, inv=None):
    """sup over [T/2, T] of r h1'/h1 against its limsup bound.

    This is a limit statement, so the tolerance is relative to the bound and
    a stabilization diagnostic is reported.
    """
    if T < 1e3:
        raise ValueError("growth exponent needs T >= 1e3")
    B = (inv or profile_invariants(p)).B
    limit = growth_limit(B)
    h1, _ = comparison_pair(p, T)
    s = np.linspace(T / 2, T, 201)
    q = s * h1.deriv(s) / h1(s)
    k = int(np.argmax(q))
    drift = float((q.max() - q.min()) / limit)
    stabilized = drift <= 0.01
    if not stabilized:
        log.warning("r h1'/h1 drifts by %.2g%% over [T/2, T]", 100 * drift)
    return LemmaCheckResult.from_slack("growth_exponent", limit - q[k], s[k], rtol * limit, limit=limit,
                                       exponent_at_horizon=float(q[-1]), drift=drift, stabilized=stabilized)


def check_shift_ratio(p, c, T=1e3, safety=2.0, tol=SLACK_TOL):
    """|1 - h(T - c)/h(T)| <= safety * |c| * C1 / T with C1 = sup_{[T/2,T]} t h'/h."""
    if T <= 10 * abs(c):
        raise ValueError("need T > 10 |c|")
    h1, _ = comparison_pair(p, T + abs(c))
    s = np.linspace(T / 2, T, 201)
    C1 = float(np.max(s * h1.deriv(s) / h1(s)))
    ratio = h1(T - c) / h1(T)
    envelope = safety * abs(c) * C1 / T
    return LemmaCheckResult.from_slack("shift_ratio", envelope - abs(1.0 - ratio), T, tol, ratio=float(ratio),
                                       C1=C1, envelope=envelope)


def check_psi_ratio(p, speed, center, r, tol=SLACK_TOL, inv=None):
    """psi2/psi1(r) <= 2 b1 speed + 1/r and h2/h1(r) <= b1 + 1/r."""
    if r <= 0:
        raise ValueError("r must be positive")
    b1 = (inv or profile_invariants(p)).b1
    psi1, psi2 = psi_pair(scale_profile(p, speed, center), r)
    h1, h2 = comparison_pair(p, r)
    slack_psi = 2 * b1 * speed + 1.0 / r - psi2(r) / psi1(r)
    slack_h = b1 + 1.0 / r - h2(r) / h1(r)
    return LemmaCheckResult.from_slack("psi_ratio", min(slack_psi, slack_h), r, tol, psi_slack=float(slack_psi),
                                       h2h1_slack=float(slack_h), psi_ratio=float(psi2(r) / psi1(r)),
                                       h2h1_ratio=float(h2(r) / h1(r)))


def model_curvature_matrix(m, speed, center):
    """S(t) along the outward radial geodesic of speed ``speed`` from radius ``center``."""
    n = m.dimension

    def S(t):
        k = speed * speed * float(m.radial_curvature(center + speed * t))
        return np.diag([0.0] + [k] * (n - 1))

    S.kinks = tuple(sorted((k - center) / speed for k in m.warp.kinks if speed > 0 and k > center))
    return S


def check_det_bound(m, p, q11, q_perp, speed, center, r, tol=SLACK_TOL, samples=201):
    """det P(t) <= (1 + t Q11(0)) psi(t)^(n-1) along a radial geodesic of model ``m``.

    ``q_perp`` is a scalar or the n-1 transverse diagonal entries of Q(0);
    psi = psi2 + g0 psi1 with g0 their mean, solved against the scaled profile.
    """
    n = m.dimension
    qp = np.broadcast_to(np.asarray(q_perp, dtype=float), (n - 1,))
    S = model_curvature_matrix(m, speed, center)
    sol = solve_jacobi_matrix(S, np.eye(n), np.diag([q11, *qp]), r, samples=samples)
    psi1, psi2 = psi_pair(scale_profile(p, speed, center), r)
    g0 = float(qp.mean())
    t = sol.times
    bound = (1.0 + t * q11) * (psi2(t) + g0 * psi1(t)) ** (n - 1)
    slack = bound - sol.detP
    ok = np.ones_like(t, dtype=bool)
    if sol.conjugate_time is not None:
        ok = t < sol.conjugate_time
    k = int(np.argmin(np.where(ok, slack, np.inf)))
    res = LemmaCheckResult.from_slack("det_bound", slack[k], t[k], tol, conjugate_time=sol.conjugate_time,
                                      max_det=float(sol.detP.max()))
    if sol.conjugate_time is not None:
        return LemmaCheckResult("det_bound", res.worst_slack, res.location, False, res.tolerance, res.details)
    return res


def random_profile_batch(seed, count):
    """Reproducible batch of valid profiles drawn across the built-in kinds."""
    rng = np.random.default_rng(seed)
    kinds = ["rational", "euler", "linear-bump", "piecewise-min", "tabulated"]
    out = []
    for _ in range(count):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "rational":
            out.append(make_profile(kind, [rng.uniform(0.05, 2.0)]))
        elif kind == "euler":
            out.append(make_profile(kind, [rng.uniform(0.05, 3.0)]))
        elif kind == "linear-bump":
            out.append(make_profile(kind, [rng.uniform(0.1, 1.5), rng.uniform(0.5, 2.0)]))
        elif kind == "piecewise-min":
            out.append(make_profile(kind, [rng.uniform(0.05, 1.5)]))
        else:
            # tabulated mixture of a rational and an euler profile
            a, c = rng.uniform(0.05, 1.0, size=2)
            t = np.linspace(0.0, 20.0, 81)
            out.append(make_profile("tabulated", table=(t, a / (1 + t * t) + c / (1 + t) ** 2)))
    return out


def run_lemma_suite(p, seed=0, T_asym=1e4, T_finite=10.0, horizon_model=None):
    """Run the five comparison checks on one profile.

    Random draws (shift r, speed, center, Q(0)) come from ``seed``.
    """
    rng = np.random.default_rng(seed)
    inv = profile_invariants(p)
    r0 = float(rng.uniform(0.5, 2.0))
    r = float(rng.uniform(0.0, r0))
    speed = float(rng.uniform(0.1, 1.0))
    center = float(rng.uniform(0.0, r0))
    q11 = float(rng.uniform(0.0, 0.5))
    q_perp = rng.uniform(0.0, 0.5, size=2)
    c = float(rng.choice([-2.0, -1.0, 1.0, 2.0]))
    r_det = float(rng.uniform(2.0, 6.0))
    m = comparison_model(3, p, horizon_model or (center + r_det + 1.0))
    return [
        check_shifted_bound(p, r, r0, T_finite, inv=inv),
        check_growth_exponent(p, T_asym, inv=inv),
        check_shift_ratio(p, c, 1e3),
        check_psi_ratio(p, speed, center, float(rng.uniform(5.0, 100.0)), inv=inv),
        check_det_bound(m, p, q11, q_perp, speed, center, r_det),
    ]
