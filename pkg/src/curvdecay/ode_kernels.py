"""Dense-output integrators for the scalar comparison ODEs and the matrix Jacobi system.

Scalar problems have the form ``v'' = c(t) v`` with a nonnegative coefficient
that may have kinks (e.g. ``lambda(|t - r|)`` at ``t = r``).  Integration is
restarted at every declared kink so the high-order method never steps across
a derivative jump.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import OdeSolution as _Dense
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .errors import NumericalFailure

ROLES = ("h1", "h2", "psi1", "psi2", "shifted_f", "generic")
DEFAULT_TOL = 1e-12
Q_FLOOR = 1e-10
# local tolerance = tol * GLOBAL_SAFETY, since adaptive global error exceeds the local target
GLOBAL_SAFETY = 0.1


def _integrate(rhs, y0, T, tol, kinks, events=None):
    """Integrate piecewise between kinks and glue the dense outputs together."""
    edges = [0.0] + sorted(k for k in set(kinks) if 0.0 < k < T) + [float(T)]
    y = np.asarray(y0, dtype=float)
    ts, interps, t_steps, y_steps = [0.0], [], [np.array([0.0])], [y[:, None]]
    ev_times = []
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=tol * 1e-3,
                        dense_output=True, events=events)
        if sol.status < 0:
            raise NumericalFailure(f"integration failed on [{a}, {b}]: {sol.message}")
        ts.extend(sol.sol.ts[1:])
        interps.extend(sol.sol.interpolants)
        t_steps.append(sol.t[1:])
        y_steps.append(sol.y[:, 1:])
        if events is not None and len(sol.t_events[0]):
            ev_times.extend(sol.t_events[0])
        y = sol.y[:, -1]
    dense = _Dense(np.asarray(ts), interps)
    return dense, np.concatenate(t_steps), np.concatenate(y_steps, axis=1), ev_times


@dataclass(frozen=True, eq=False)
class OdeSolution:
    """Dense solution of a scalar second-order ODE on [0, horizon].

    ``grid``/``values``/``derivs`` are the accepted step points; ``value`` and
    ``deriv`` evaluate the order-7 dense interpolant anywhere in the domain.
    """

    role: str
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    horizon: float
    _dense: _Dense
    _row: int = 0

    def value(self, t):
        return self._eval(t, self._row)

    def deriv(self, t):
        return self._eval(t, self._row + 1)

    __call__ = value

    def _eval(self, t, row):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < -1e-12) or np.any(arr > self.horizon * (1 + 1e-12)):
            raise ValueError(f"evaluation outside [0, {self.horizon}]")
        out = self._dense(np.clip(arr, 0.0, self.horizon))[row]
        return out if arr.ndim else float(out)


def _coeff_kinks(coeff, kinks):
    if kinks is None:
        kinks = getattr(coeff, "kinks", ())
    return tuple(kinks)


def solve_linear_second_order(coeff, v0, d0, T, tol=DEFAULT_TOL, kinks=None, role="generic"):
    """Solve ``v'' = coeff(t) v`` with ``v(0)=v0, v'(0)=d0`` on [0, T]."""
    if T <= 0 or tol <= 0:
        raise ValueError("T and tol must be positive")

    def rhs(t, y):
        return (y[1], coeff(t) * y[0])

    dense, t, y, _ = _integrate(rhs, (v0, d0), T, tol, _coeff_kinks(coeff, kinks))
    return OdeSolution(role, t, y[0], y[1], float(T), dense)


def solve_fundamental_pair(coeff, T, tol=DEFAULT_TOL, kinks=None, roles=("h1", "h2")):
    """Solve the (0,1) and (1,0) solutions of ``v'' = coeff v`` in one sweep.

    Returns the pair (first, second) sharing one step grid.
    """
    if T <= 0 or tol <= 0:
        raise ValueError("T and tol must be positive")

    def rhs(t, y):
        c = coeff(t)
        return (y[1], c * y[0], y[3], c * y[2])

    dense, t, y, _ = _integrate(rhs, (0.0, 1.0, 1.0, 0.0), T, tol, _coeff_kinks(coeff, kinks))
    first = OdeSolution(roles[0], t, y[0], y[1], float(T), dense, 0)
    second = OdeSolution(roles[1], t, y[2], y[3], float(T), dense, 2)
    return first, second


@functools.lru_cache(maxsize=256)
def comparison_pair(profile, T, tol=DEFAULT_TOL):
    """(h1, h2) for a profile on [0, T]; cached because profiles are immutable."""
    return solve_fundamental_pair(profile, float(T), tol, roles=("h1", "h2"))


def psi_pair(scaled, T, tol=DEFAULT_TOL):
    """(psi1, psi2) solved against a scaled profile."""
    return solve_fundamental_pair(scaled, float(T), tol, roles=("psi1", "psi2"))


class _Shifted:
    def __init__(self, profile, r):
        self.profile = profile
        self.r = r
        pts = {r}
        for k in profile.kinks:
            pts.update({r - k, r + k})
        self.kinks = tuple(sorted(p for p in pts if p > 0))

    def __call__(self, t):
        return self.profile(abs(t - self.r))


def solve_shifted(profile, r, T, tol=DEFAULT_TOL):
    """Solution of ``f'' = lambda(|t - r|) f``, ``f(0)=0, f'(0)=1``."""
    if not 0.0 <= r <= T:
        raise ValueError(f"need 0 <= r <= T, got r={r}, T={T}")
    return solve_linear_second_order(_Shifted(profile, float(r)), 0.0, 1.0, T, tol, role="shifted_f")


@dataclass(frozen=True, eq=False)
class JacobiMatrixSolution:
    """Matrix solution of ``P'' = -P S(t)`` with derived ``Q = P^-1 P'``.

    ``Q`` is NaN at samples where ``|det P|`` falls below the conditioning
    floor or after the first conjugate time.
    """

    dimension: int
    S_of_t: object
    times: np.ndarray
    P: np.ndarray
    Pp: np.ndarray
    detP: np.ndarray
    Q: np.ndarray
    conjugate_time: float | None
    horizon: float
    _dense: _Dense

    def state(self, t):
        m = self.dimension
        y = self._dense(np.asarray(t, dtype=float))
        return y[: m * m].reshape(m, m, -1), y[m * m:].reshape(m, m, -1)

    def q_at(self, t):
        """Q at arbitrary times (no floor applied)."""
        P, Pp = self.state(np.atleast_1d(t))
        return np.stack([np.linalg.solve(P[:, :, k], Pp[:, :, k]) for k in range(P.shape[2])])


def solve_jacobi_matrix(S, P0, P0p, T, tol=DEFAULT_TOL, samples=401, kinks=None):
    """Integrate the matrix Jacobi equation and sample P, det P and Q."""
    P0 = np.atleast_2d(np.asarray(P0, dtype=float))
    P0p = np.atleast_2d(np.asarray(P0p, dtype=float))
    m = P0.shape[0]
    if P0.shape != (m, m) or P0p.shape != (m, m):
        raise ValueError("P0 and P0p must be square and of equal size")

    def S_mat(t):
        return np.atleast_2d(np.asarray(S(t), dtype=float))

    S0 = S_mat(0.0)
    if S0.shape != (m, m) or not np.allclose(S0, S0.T):
        raise ValueError("S must be symmetric with the dimension of P")

    def rhs(t, y):
        P = y[: m * m].reshape(m, m)
        return np.concatenate([y[m * m:], (-P @ S_mat(t)).ravel()])

    def det_event(t, y):
        return np.linalg.det(y[: m * m].reshape(m, m))

    det_event.terminal = False
    det_event.direction = -1

    y0 = np.concatenate([P0.ravel(), P0p.ravel()])
    dense, _, _, ev = _integrate(rhs, y0, T, max(tol * GLOBAL_SAFETY, 5e-14), _coeff_kinks(S, kinks),
                                 events=det_event)
    times = np.linspace(0.0, T, samples) if np.isscalar(samples) else np.asarray(samples, dtype=float)
    y = dense(times)
    P = y[: m * m].reshape(m, m, -1)
    Pp = y[m * m:].reshape(m, m, -1)
    detP = np.array([np.linalg.det(P[:, :, k]) for k in range(len(times))])
    bad = np.flatnonzero(detP <= 0)
    cands = [e for e in ev if e > 0] + ([float(times[bad[0]])] if len(bad) else [])
    touch = _touching_zero(dense, m, T)
    conj = min(cands + ([touch] if touch is not None else []), default=None)

    floor = Q_FLOOR * np.max(np.abs(detP))
    Q = np.full((len(times), m, m), np.nan)
    for k, t in enumerate(times):
        if abs(detP[k]) >= floor and detP[k] > 0 and (conj is None or t < conj):
            Q[k] = np.linalg.solve(P[:, :, k], Pp[:, :, k])
    return JacobiMatrixSolution(m, S, times, P, Pp, detP, Q, conj, float(T), dense)


def _touching_zero(dense, m, T, fine=4001, rel=1e-10):
    """First zero of det P that does not change sign (even multiplicity).

    The sign-change event misses these, e.g. det = cos^2 for a repeated
    focusing direction, so local minima of |det| are refined on the dense
    solution instead.
    """
    def det(t):
        return np.linalg.det(dense(t)[: m * m].reshape(m, m))

    ts = np.linspace(0.0, T, fine)
    d = np.abs([det(t) for t in ts])
    running = np.maximum.accumulate(d)
    for k in range(1, fine - 1):
        if d[k] <= d[k - 1] and d[k] <= d[k + 1]:
            res = minimize_scalar(lambda t: abs(det(t)), bounds=(ts[k - 1], ts[k + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if abs(res.fun) <= rel * running[k]:
                return float(res.x)
    return None


def riccati_residual(sol, step=None):
    """Max entry of ``Q' + Q^2 + S`` over samples, with Q' by extrapolated differences.

    The derivative comes from differencing the dense solution, so it does not
    reuse the right-hand side that produced P.
    """
    valid = ~np.isnan(sol.Q[:, 0, 0])
    if not valid.any():
        raise ValueError("Q is undefined on every sample")
    h = step or min(1e-3, sol.horizon / 200)
    upper = sol.horizon if sol.conjugate_time is None else sol.conjugate_time
    ts = sol.times[valid]
    ts = ts[(ts - 2 * h >= 0) & (ts + 2 * h <= upper)]
    if not len(ts):
        raise ValueError("no samples far enough from the domain ends")
    worst = 0.0
    for t in ts:
        # 4th-order central stencil at h and h/2, Richardson-combined to 6th order
        q = sol.q_at([t - 2 * h, t - h, t - h / 2, t + h / 2, t + h, t + 2 * h])
        d_h = (q[0] - 8 * q[1] + 8 * q[4] - q[5]) / (12 * h)
        d_half = (q[1] - 8 * q[2] + 8 * q[3] - q[4]) / (6 * h)
        dq = (16 * d_half - d_h) / 15
        Q = sol.q_at(t)[0]
        S = np.atleast_2d(sol.S_of_t(t))
        worst = max(worst, float(np.max(np.abs(dq + Q @ Q + S))))
    return worst
