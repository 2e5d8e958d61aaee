"""Curvature-decay profiles lambda(t) and their scalar invariants.

A profile is a nonnegative, nonincreasing, continuous function on [0, inf)
with t^2 * lambda(t) bounded.  Two invariants drive every constant in the
package::

    B  = limsup_{t -> inf} t^2 lambda(t)
    b1 = int_0^inf lambda(t) dt
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import NumericalFailure, ProfileError

log = logging.getLogger(__name__)

KINDS = ("zero", "rational", "euler", "linear-bump", "piecewise-min", "tabulated")
_NPARAMS = {"zero": 0, "rational": 1, "euler": 1, "linear-bump": 2, "piecewise-min": 1}
MONOTONE_RTOL = 1e-12


@dataclass(frozen=True)
class CurvatureProfile:
    """Immutable decay profile.

    ``params`` per kind::

        zero           ()
        rational       (B0,)     B0 / (1 + t^2)
        euler          (c,)      c / (1 + t)^2
        linear-bump    (a, b)    max(0, a - b t)
        piecewise-min  (c,)      min(c, c / t^2)
        tabulated      ()        PCHIP through (t, value) rows, C/t^2 tail

    Use :func:`make_profile` to get a validated instance; the constructor
    itself accepts anything so that :func:`validate_profile` can diagnose it.
    """

    kind: str
    params: tuple = ()
    table_t: tuple = ()
    table_v: tuple = ()
    _interp: object = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        if self.kind == "tabulated":
            t = tuple(float(x) for x in self.table_t)
            v = tuple(float(x) for x in self.table_v)
            if len(t) < 2 or len(t) != len(v):
                raise ProfileError("tabulated profile needs at least two (t, value) rows")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise ProfileError("tabulated t must start at 0 and increase strictly")
            object.__setattr__(self, "table_t", t)
            object.__setattr__(self, "table_v", v)
            object.__setattr__(self, "_interp", PchipInterpolator(t, v, extrapolate=False))
        elif len(self.params) != _NPARAMS[self.kind]:
            raise ProfileError(f"{self.kind} profile takes {_NPARAMS[self.kind]} parameters")

    @property
    def domain_cap(self):
        """Last tabulated abscissa (inf for analytic kinds)."""
        return self.table_t[-1] if self.kind == "tabulated" else math.inf

    @property
    def tail_constant(self):
        """C in the C/t^2 tail attached beyond a table."""
        if self.kind != "tabulated":
            return None
        return self.table_t[-1] ** 2 * self.table_v[-1]

    @property
    def kinks(self):
        """Points where lambda fails to be smooth."""
        if self.kind == "linear-bump":
            a, b = self.params
            return (a / b,) if b > 0 and a > 0 else ()
        if self.kind == "piecewise-min":
            return (1.0,)
        if self.kind == "tabulated":
            return self.table_t[1:]
        return ()

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        k = self.kind
        if k == "zero":
            out = np.zeros_like(t)
        elif k == "rational":
            out = self.params[0] / (1.0 + t * t)
        elif k == "euler":
            out = self.params[0] / (1.0 + t) ** 2
        elif k == "linear-bump":
            a, b = self.params
            out = np.maximum(0.0, a - b * t)
        elif k == "piecewise-min":
            c = self.params[0]
            with np.errstate(divide="ignore"):
                out = np.where(t <= 1.0, c, c / np.maximum(t, 1.0) ** 2)
        else:
            cap = self.table_t[-1]
            head = self._interp(np.minimum(t, cap))
            with np.errstate(divide="ignore", invalid="ignore"):
                tail = self.tail_constant / np.maximum(t, cap) ** 2
            out = np.where(t <= cap, head, tail)
        return out if out.ndim else float(out)

    @classmethod
    def from_file(cls, path):
        """Load a tabulated profile from two-column text (t, lambda)."""
        data = np.loadtxt(Path(path), ndmin=2)
        if data.shape[1] != 2:
            raise ProfileError(f"{path}: expected two columns, got {data.shape[1]}")
        return make_profile("tabulated", table=(data[:, 0], data[:, 1]))


@dataclass(frozen=True)
class ProfileInvariants:
    B: float
    b1: float
    tail_estimate_error: float = 0.0
    stabilized: bool = True


@dataclass(frozen=True)
class Violation:
    kind: str  # "negative" | "increasing" | "nonfinite"
    index: int
    t: float
    value: float


@dataclass(frozen=True)
class ScaledProfile:
    """t -> speed^2 * lambda(|center - speed * t|).

    This is the curvature seen along a geodesic of speed ``speed`` leaving a
    point at distance ``center`` from the base point.
    """

    base: CurvatureProfile
    speed: float
    center: float

    def __call__(self, t):
        c = self.speed
        return c * c * self.base(np.abs(self.center - c * np.asarray(t, dtype=float)))

    @property
    def kinks(self):
        c = self.speed
        if c == 0.0:
            return ()
        pts = {self.center / c}
        for k in self.base.kinks:
            pts.update({(self.center - k) / c, (self.center + k) / c})
        return tuple(sorted(p for p in pts if p > 0))


def make_profile(kind, params=(), table=None):
    """Build and validate a profile; raise :class:`ProfileError` on bad input."""
    params = tuple(float(x) for x in params)
    if any(not math.isfinite(x) for x in params):
        raise ProfileError("profile parameters must be finite")
    if any(x < 0 for x in params):
        raise ProfileError(f"negative parameter in {kind} profile: {params}")
    if kind == "linear-bump" and params and params[1] == 0.0 and params[0] > 0.0:
        raise ProfileError("linear-bump with b = 0 is not integrable")
    if kind == "tabulated":
        if table is None:
            raise ProfileError("tabulated profile needs a table")
        t, v = (np.asarray(x, dtype=float) for x in table)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ProfileError("tabulated values must be finite and nonnegative")
        p = CurvatureProfile("tabulated", (), tuple(t), tuple(v))
    else:
        p = CurvatureProfile(kind, params)
    bad = validate_profile(p, step=0.01, horizon=max(10.0, 2 * p.domain_cap if p.kind == "tabulated" else 10.0))
    if bad:
        raise ProfileError(f"profile violates hypotheses: {bad[:3]}")
    return p


def validate_profile(p, step=0.01, horizon=10.0):
    """Check nonnegativity and monotonicity on a sample grid.

    Tabulated profiles are checked at their own nodes (indices refer to table
    rows); the C/t^2 tail is monotone by construction.  Never raises.
    """
    if p.kind == "tabulated":
        t = np.asarray(p.table_t)
        v = np.asarray(p.table_v)
    else:
        t = np.arange(0.0, horizon + 0.5 * step, step)
        v = np.asarray(p(t))
    out = []
    for i in np.flatnonzero(~np.isfinite(v)):
        out.append(Violation("nonfinite", int(i), float(t[i]), float(v[i])))
    for i in np.flatnonzero(v < 0):
        out.append(Violation("negative", int(i), float(t[i]), float(v[i])))
    rise = v[1:] - v[:-1]
    limit = MONOTONE_RTOL * np.abs(v[:-1])
    for i in np.flatnonzero(rise > limit):
        out.append(Violation("increasing", int(i + 1), float(t[i + 1]), float(v[i + 1])))
    return out


def _exact_B(p):
    k = p.kind
    if k == "zero" or k == "linear-bump":
        return 0.0
    if k in ("rational", "euler", "piecewise-min"):
        return p.params[0]
    return p.tail_constant


def _exact_tail(p, h):
    """int_h^inf lambda for kinds with a closed-form tail."""
    k = p.kind
    if k == "zero":
        return 0.0
    if k == "rational":
        return p.params[0] * (0.5 * math.pi - math.atan(h))
    if k == "euler":
        return p.params[0] / (1.0 + h)
    if k == "linear-bump":
        a, b = p.params
        return 0.5 * b * max(0.0, a / b - h) ** 2 if a > 0 else 0.0
    if k == "piecewise-min":
        c = p.params[0]
        return c * (1.0 - h) + c if h < 1.0 else c / h
    cap = p.table_t[-1]
    if h >= cap:
        return p.tail_constant / h if h > 0 else math.inf
    return None


def _quad_piecewise(fun, lo, hi, breaks=(), epsrel=1e-12):
    """Adaptive quadrature over a geometric partition of [lo, hi] plus breakpoints."""
    edges = [lo]
    x = 1.0
    while x < hi:
        if x > lo:
            edges.append(x)
        x *= 4.0
    edges += [b for b in breaks if lo < b < hi]
    edges.append(hi)
    edges = sorted(set(edges))
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e, info = integrate.quad(fun, a, b, epsabs=1e-14, epsrel=epsrel, limit=200, full_output=1)[:3]
        if e > max(1e-10, 1e-8 * abs(val)):
            raise NumericalFailure(f"quadrature on [{a}, {b}] did not converge (err {e:.2e})")
        total += val
        err += e
    return total, err


def profile_invariants(p, horizon=1e4, tail_model="exact"):
    """Compute (B, b1) for a profile.

    ``tail_model="exact"`` uses closed forms for B and for the tail of b1
    beyond ``horizon``; ``"power-law-fit"`` fits C t^-k on [horizon/2, horizon]
    and integrates the fit.  The head integral is always adaptive quadrature.
    """
    if tail_model not in ("exact", "power-law-fit"):
        raise ValueError(f"unknown tail model {tail_model!r}")
    head_hi = horizon
    if p.kind == "tabulated" and tail_model == "exact":
        head_hi = min(horizon, p.domain_cap)
    head, qerr = _quad_piecewise(lambda s: float(p(s)), 0.0, head_hi, p.kinks)

    stabilized = True
    if tail_model == "exact":
        B = _exact_B(p)
        tail = _exact_tail(p, head_hi)
        tail_err = qerr + (tail if p.kind == "tabulated" else 0.0)
    else:
        s = np.geomspace(horizon / 2, horizon, 65)
        v = np.asarray(p(s))
        w = s * s * v
        B = float(w.max())
        if B == 0.0:
            tail = 0.0
        else:
            if np.any(v <= 0):
                raise NumericalFailure("power-law fit needs a positive tail window")
            slope, icpt = np.polyfit(np.log(s), np.log(v), 1)
            k = -slope
            if k <= 1.0:
                raise NumericalFailure(f"fitted decay exponent {k:.3f} is not integrable")
            tail = math.exp(icpt) * horizon ** (1.0 - k) / (k - 1.0)
            stabilized = (w.max() - w.min()) <= 0.01 * w.max()
            if not stabilized:
                log.warning("t^2 lambda has not stabilized on [%g, %g]", horizon / 2, horizon)
        tail_err = qerr + tail
    b1 = head + tail
    if not (math.isfinite(B) and math.isfinite(b1)):
        raise NumericalFailure("profile invariants are not finite")
    return ProfileInvariants(B=float(B), b1=float(b1), tail_estimate_error=float(tail_err), stabilized=bool(stabilized))


def scale_profile(p, speed, center):
    if not 0.0 <= speed <= 1.0:
        raise ProfileError(f"speed must lie in [0, 1], got {speed}")
    if center < 0.0:
        raise ProfileError(f"center must be nonnegative, got {center}")
    return ScaledProfile(p, float(speed), float(center))


def profile_from_spec(spec):
    """Build a profile from a ``{"kind": ..., "params": [...]}``-style mapping."""
    kind = spec["kind"]
    if kind == "tabulated":
        if spec.get("path"):
            return CurvatureProfile.from_file(spec["path"])
        return make_profile("tabulated", table=(spec["t"], spec["values"]))
    return make_profile(kind, spec.get("params", ()))
