import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvdecay.inequality_verifier import (InequalityParams, RadialTestFunction, SubmanifoldSpec, b1_damping,
                                           isoperimetric_check, sobolev_check_domain, sobolev_constant_domain,
                                           sobolev_constant_submanifold, sobolev_sides, submanifold_check_flat)
from curvdecay.model_manifold import comparison_model, euclidean
from curvdecay.profiles import make_profile


def ball(k):
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def oracle_domain(n, theta, B, b1, r0):
    alpha = (1 + math.sqrt(1 + 4 * B)) / 2
    return n * (ball(n) * theta / (alpha * (2 * math.exp(r0 * b1) - 1) ** (n - 1))) ** (1 / n)


def oracle_sub(n, p, theta, B, b1, r0):
    alpha = (1 + math.sqrt(1 + 4 * B)) / 2
    damp = 1.0 if b1 == 0 else 2 * b1 / (math.exp(2 * b1) - 1)
    num = damp * (n + p) * ball(n + p) * theta
    den = p * ball(p) * (2 * math.exp(r0 * b1) - 1) ** (n + p - 1) * alpha
    return n * (num / den) ** (1 / n)


@pytest.mark.parametrize("q,expected", [
    (InequalityParams(2, 1.0, 0.0, 0.0, 7.0), 2 * math.sqrt(math.pi)),
    (InequalityParams(3, 1.0, 0.0, 0.0, 0.0), 3 * (4 * math.pi / 3) ** (1 / 3)),
    (InequalityParams(2, 0.5, 2.0, 2.0, 1.0), 0.47750737),
])
def test_domain_constant_anchors(q, expected):
    assert sobolev_constant_domain(q) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("q,expected", [
    (InequalityParams(2, 1.0, 0.0, 0.0, 1.0, 2), 2 * math.sqrt(math.pi)),
    (InequalityParams(3, 1.0, 0.0, 0.0, 1.0, 2), 3 * (4 * math.pi / 3) ** (1 / 3)),
])
def test_submanifold_constant_anchors(q, expected):
    assert sobolev_constant_submanifold(q) == pytest.approx(expected, abs=1e-9)


def test_submanifold_constant_drops_with_b1():
    flat = sobolev_constant_submanifold(InequalityParams(2, 1.0, 0.0, 0.0, 1.0, 2))
    curved = sobolev_constant_submanifold(InequalityParams(2, 1.0, 0.0, 0.1, 1.0, 2))
    assert curved < flat


def test_submanifold_needs_codimension():
    with pytest.raises(ValueError):
        sobolev_constant_submanifold(InequalityParams(2, 1.0, 0.0, 0.0, 1.0, None))


def test_b1_series_continuity():
    assert b1_damping(0.0) == 1.0
    q_small = InequalityParams(2, 1.0, 0.0, 1e-13, 1.0, 2)
    q_zero = InequalityParams(2, 1.0, 0.0, 0.0, 1.0, 2)
    assert sobolev_constant_submanifold(q_small) == pytest.approx(sobolev_constant_submanifold(q_zero), abs=1e-9)
    assert b1_damping(1e-11) == pytest.approx(1 - 1e-11, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.floats(0.01, 1.0), st.floats(0.0, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0),
       st.integers(2, 4))
def test_constants_match_oracle(n, theta, B, b1, r0, p):
    q = InequalityParams(n, theta, B, b1, r0, p)
    assert sobolev_constant_domain(q) == pytest.approx(oracle_domain(n, theta, B, b1, r0), rel=1e-12)
    if b1 > 1e-6:
        assert sobolev_constant_submanifold(q) == pytest.approx(oracle_sub(n, p, theta, B, b1, r0), rel=1e-12)


@pytest.mark.parametrize("field,values,direction", [
    ("B", np.linspace(0, 4, 9), -1),
    ("b1", np.linspace(0, 2, 9), -1),
    ("r0", np.linspace(0, 3, 9), -1),
    ("theta", np.linspace(0.05, 1, 9), +1),
])
def test_domain_constant_monotone(field, values, direction):
    base = dict(n=3, theta=0.7, B=1.0, b1=0.5, r0=1.0)
    cs = [sobolev_constant_domain(InequalityParams(**{**base, field: v})) for v in values]
    d = np.diff(cs) * direction
    assert np.all(d >= -1e-15)
    if field in ("B", "theta"):
        assert np.all(d > 0)


@pytest.mark.parametrize("bad", [dict(n=1), dict(theta=1.5), dict(b1=-0.1), dict(r0=math.inf)])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        InequalityParams(**{**dict(n=2, theta=1.0, B=0.0, b1=0.0, r0=1.0), **bad})


def test_test_function_values():
    f = RadialTestFunction("affine", (2.0, 1.0))
    assert f.value(0.5) == 1.5 and f.deriv(0.5) == -1.0
    g = RadialTestFunction("bump", (1.0, 2.0, 0.5))
    h = 1e-6
    assert g.deriv(0.3) == pytest.approx((g.value(0.3 + h) - g.value(0.3 - h)) / (2 * h), rel=1e-7)
    with pytest.raises(ValueError):
        RadialTestFunction("affine", (1.0, 2.0)).require_positive(1.0)
    with pytest.raises(ValueError):
        RadialTestFunction("cubic", (1.0,))


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_flat_equality(zero, n, R):
    m = euclidean(n, 1000.0)
    assert abs(isoperimetric_check(m, zero, R).computed["margin"]) <= 1e-9
    rep = sobolev_check_domain(m, zero, R, RadialTestFunction("constant", (1.0,)))
    assert abs(rep.computed["margin"]) <= 1e-9
    assert rep.status == "PASS"


def test_flat_sides_values(zero):
    rep = sobolev_check_domain(euclidean(2, 1000.0), zero, 1.0, RadialTestFunction("constant", (1.0,)))
    assert rep.computed["lhs"] == pytest.approx(2 * math.pi)
    assert rep.computed["rhs"] == pytest.approx(2 * math.pi)


def test_flat_strict_for_nonconstant(zero):
    rep = sobolev_check_domain(euclidean(2, 1000.0), zero, 1.0, RadialTestFunction("affine", (2.0, 1.0)))
    assert rep.computed["margin"] > 1e-3
    # explicit 1-D quadratures: boundary 2 pi, gradient pi, power 2 pi * int (2-r)^2 r dr
    lhs = 2 * math.pi + math.pi
    rhs = 2 * math.sqrt(math.pi) * math.sqrt(2 * math.pi * (4 / 2 - 4 / 3 + 1 / 4))
    assert rep.computed["lhs"] == pytest.approx(lhs, rel=1e-12)
    assert rep.computed["rhs"] == pytest.approx(rhs, rel=1e-12)


def test_curved_isoperimetric_margin(rational_half, rational1):
    rep = isoperimetric_check(comparison_model(2, rational_half, 1000.0), rational1, 1.0)
    assert rep.status == "PASS" and rep.computed["margin"] >= 0
    assert rep.computed["theta"] < 1


def test_curved_sobolev_euler(euler2):
    rep = sobolev_check_domain(comparison_model(2, euler2, 1000.0), euler2, 1.0,
                               RadialTestFunction("constant", (1.0,)))
    assert rep.computed["margin"] >= 0
    assert rep.computed["theta"] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("s", [0.25, 3.0, 10.0])
def test_homogeneity(euler2, s):
    m = comparison_model(2, euler2, 1000.0)
    f = RadialTestFunction("bump", (1.0, 2.0, 0.7))
    _, _, _, lhs, rhs = sobolev_sides(m, euler2, 1.5, f)
    _, _, _, lhs_s, rhs_s = sobolev_sides(m, euler2, 1.5, f.scaled(s))
    assert lhs_s == pytest.approx(s * lhs, rel=1e-11)
    assert rhs_s == pytest.approx(s * rhs, rel=1e-11)


@pytest.mark.parametrize("kind,n,p,lhs,rhs", [
    ("flat_disk", 2, 2, 3 * math.pi, 2 * math.pi),
    ("round_sphere", 2, 2, 12 * math.pi, 4 * math.pi),
])
def test_submanifold_anchors(kind, n, p, lhs, rhs):
    rep = submanifold_check_flat(SubmanifoldSpec(kind, n, p), 1.0)
    assert rep.computed["lhs"] == pytest.approx(lhs, rel=1e-14)
    assert rep.computed["rhs"] == pytest.approx(rhs, rel=1e-14)
    assert rep.status == "PASS"


@pytest.mark.parametrize("n,p", [(2, 2), (2, 3), (3, 2)])
@pytest.mark.parametrize("kind", ["flat_disk", "round_sphere"])
def test_submanifold_pass(kind, n, p):
    assert submanifold_check_flat(SubmanifoldSpec(kind, n, p), 1.0).status == "PASS"


@pytest.mark.parametrize("c", [0.3, 4.0])
def test_submanifold_homogeneous(c):
    s = SubmanifoldSpec("flat_disk", 2, 3)
    a = submanifold_check_flat(s, 1.0).computed
    b = submanifold_check_flat(s, c).computed
    assert b["lhs"] == pytest.approx(c * a["lhs"]) and b["rhs"] == pytest.approx(c * a["rhs"])
