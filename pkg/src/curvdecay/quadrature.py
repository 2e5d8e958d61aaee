"""Small quadrature helpers shared by the geometric modules."""

import math

import numpy as np
from scipy.special import gammaln

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def unit_ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def sphere_area(k):
    """Area of the unit k-sphere S^k embedded in R^{k+1}."""
    return (k + 1) * unit_ball_volume(k + 1)


def gauss_panels(func, lo, hi):
    """Integrate ``func`` over each panel [lo[i], hi[i]] with 10-point Gauss-Legendre.

    ``func`` must accept a flat array of abscissae.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[..., None] + half[..., None] * _GL_NODES
    vals = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
    return half * (vals @ _GL_WEIGHTS)


def cumulative_gauss(func, grid):
    """Cumulative integral of ``func`` from grid[0] to every grid point."""
    grid = np.asarray(grid, dtype=float)
    pieces = gauss_panels(func, grid[:-1], grid[1:])
    return np.concatenate([[0.0], np.cumsum(pieces)])


def refine_grid(grid, breakpoints=(), per_panel=1):
    """Merge breakpoints into a sorted grid and optionally subdivide each panel."""
    grid = np.asarray(grid, dtype=float)
    extra = [b for b in breakpoints if grid[0] < b < grid[-1]]
    g = np.unique(np.concatenate([grid, extra]))
    if per_panel > 1:
        frac = np.linspace(0.0, 1.0, per_panel + 1)[:-1]
        g = np.concatenate([(a + (b - a) * frac) for a, b in zip(g[:-1], g[1:])] + [g[-1:]])
    return g


def mixed_grid(lo, hi, n, head=1e-3):
    """Grid on [lo, hi] that is geometric near ``lo`` and uniform further out."""
    if hi <= lo:
        return np.array([lo, hi], dtype=float)
    lin = np.linspace(lo, hi, n)
    start = max(head * (hi - lo), 1e-12)
    geo = lo + np.geomspace(start, hi - lo, n)
    return np.unique(np.concatenate([[lo], lin, geo]))
