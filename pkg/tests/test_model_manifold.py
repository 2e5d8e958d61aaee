import math

import numpy as np
import pytest
from scipy import integrate

from conftest import euler2_h1
from curvdecay.model_manifold import (ModelManifold, TabulatedWarp, bishop_gromov_ratio, comparison_model,
                                      euclidean, ricci_decay_check)
from curvdecay.ode_kernels import comparison_pair
from curvdecay.profiles import make_profile


@pytest.mark.parametrize("n,r,area,vol", [
    (2, 1.0, 2 * math.pi, math.pi),
    (3, 2.0, 16 * math.pi, 32 * math.pi / 3),
])
def test_euclidean_areas_volumes(n, r, area, vol):
    m = euclidean(n, 10.0)
    assert m.sphere_area(r) == pytest.approx(area, rel=1e-14)
    assert m.ball_volume(r) == pytest.approx(vol, rel=1e-12)


def test_euler_warp_volume_closed_form(euler2):
    m = comparison_model(2, euler2, 10.0)
    assert m.ball_volume(1.0) == pytest.approx(2 * math.pi * (7 / 3 - math.log(2)) / 3, rel=1e-10)


def test_ball_volumes_grid_matches_pointwise(rational1):
    m = comparison_model(3, rational1, 50.0)
    radii = np.array([0.3, 1.0, 4.0, 20.0, 50.0])
    np.testing.assert_allclose(m.ball_volumes(radii), [m.ball_volume(r) for r in radii], rtol=1e-10)


@pytest.mark.parametrize("r", [0.5, 2.0, 7.0])
def test_area_is_volume_derivative(euler2, r):
    m = comparison_model(2, euler2, 10.0)
    h = 1e-4
    dv = (m.ball_volume(r + h) - m.ball_volume(r - h)) / (2 * h)
    assert dv == pytest.approx(m.sphere_area(r), rel=1e-7)


def test_radius_outside_domain():
    with pytest.raises(ValueError):
        euclidean(2, 5.0).ball_volume(6.0)


def test_curvatures_euclidean_and_euler(euler2):
    m = euclidean(3, 10.0)
    assert m.radial_curvature(2.0) == 0.0
    assert m.spherical_curvature(2.0) == 0.0
    c = comparison_model(2, euler2, 10.0)
    r = np.linspace(0.1, 9, 30)
    np.testing.assert_allclose(c.radial_curvature(r), -euler2(r), rtol=1e-10)


def test_ricci_euclidean_zero_profile(zero):
    res = ricci_decay_check(euclidean(3, 100.0), zero, 100.0)
    assert res.passed and res.worst_margin == 0.0


def test_ricci_equality_for_own_h1(rational1):
    res = ricci_decay_check(comparison_model(3, rational1, 100.0), rational1)
    assert res.passed
    assert abs(res.worst_margin) <= 1e-10


def test_ricci_smaller_profile_passes(rational_half, rational1):
    res = ricci_decay_check(comparison_model(2, rational_half, 100.0), rational1)
    assert res.passed and res.worst_margin >= 0


def test_ricci_fails_against_zero(euler2, zero):
    res = ricci_decay_check(comparison_model(2, euler2, 100.0), zero)
    assert not res.passed
    assert res.first_violation is not None and res.first_violation < 0.1


def test_full_ricci_variant_reports_tangential(euler2):
    m = comparison_model(3, euler2, 100.0)
    res = ricci_decay_check(m, euler2, variant="full-ricci")
    assert res.tangential_margin is not None
    assert ricci_decay_check(m, euler2, variant="sectional").worst_margin <= 0 + 1e-10


def test_tabulated_warp_matches_analytic(euler2):
    r = np.linspace(0.0, 5.0, 1001)
    tw = TabulatedWarp(r, euler2_h1(r))
    m = ModelManifold(2, tw)
    ref = comparison_model(2, euler2, 5.0)
    assert m.ball_volume(3.0) == pytest.approx(ref.ball_volume(3.0), rel=1e-9)
    s = np.linspace(0.5, 4.5, 9)
    np.testing.assert_allclose(m.radial_curvature(s), ref.radial_curvature(s), rtol=1e-6)
    assert ricci_decay_check(m, euler2, 4.9).passed


def test_tabulated_warp_from_file(tmp_path):
    r = np.linspace(0.0, 2.0, 101)
    path = tmp_path / "warp.txt"
    np.savetxt(path, np.column_stack([r, np.sinh(r)]))
    m = ModelManifold(3, TabulatedWarp.from_file(path))
    assert m.ball_volume(1.0) == pytest.approx(4 * math.pi * (math.sinh(2) / 4 - 0.5), rel=1e-8)


def test_warp_initial_conditions_checked():
    r = np.linspace(0.0, 2.0, 101)
    with pytest.raises(ValueError):
        ModelManifold(2, TabulatedWarp(r, 2 * r))


def test_bg_own_h1_theta_one(rational1):
    m = comparison_model(2, rational1, 1000.0)
    radii, ratio, est = bishop_gromov_ratio(m, rational1)
    assert est.theta == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(ratio, 1.0, atol=1e-9)


def test_bg_theta_one_independent_route(euler2):
    # numerator by adaptive quadrature, denominator by an LSODA-integrated h1
    R = 200.0
    m = comparison_model(3, euler2, R)
    h1, _ = comparison_pair(euler2, R)
    ode = integrate.solve_ivp(lambda t, y: (y[1], euler2(t) * y[0], y[0] ** 2), (0, R), (0.0, 1.0, 0.0),
                              method="LSODA", rtol=1e-12, atol=1e-14)
    den = m.omega * ode.y[2, -1]
    assert m.ball_volume(R) / den == pytest.approx(1.0, abs=1e-9)


def test_bg_euclidean_vs_euler_tends_to_zero(euler2):
    m = euclidean(2, 1000.0)
    radii, ratio, est = bishop_gromov_ratio(m, euler2)
    assert est.monotone_violation <= 1e-10
    assert est.theta < 0.01
    # closed form: pi R^2 / (2 pi int h1) ~ 4.5 / R
    R = radii[-1]
    den = ((1 + R) ** 3 / 3 - 1 / 3 - math.log(1 + R)) / 3
    assert est.theta == pytest.approx(0.5 * R * R / den, rel=1e-8)


def test_bg_smaller_profile_ratio(rational_half, rational1):
    m = comparison_model(2, rational_half, 1000.0)
    radii, ratio, est = bishop_gromov_ratio(m, rational1)
    assert np.all(np.diff(ratio) <= 1e-10)
    assert 0.0 < est.theta < 1.0
    assert est.theta == pytest.approx(0.2025132250602056, rel=1e-6)  # regression baseline


def test_bg_rejects_bad_radii(rational1):
    m = comparison_model(2, rational1, 10.0)
    with pytest.raises(ValueError):
        bishop_gromov_ratio(m, rational1, [1.0, 0.5])


PAIRS = [
    ("euclidean", None, "euler", [2.0], 2),
    ("euclidean", None, "piecewise-min", [0.5], 3),
    ("comparison", ("rational", [0.5]), "rational", [1.0], 2),
    ("comparison", ("linear-bump", [1.0, 1.0]), "linear-bump", [1.0, 1.0], 3),
    ("comparison", ("euler", [1.0]), "euler", [2.0], 2),
]


@pytest.mark.parametrize("warp,wp,kind,params,n", PAIRS)
def test_bg_monotone_when_ricci_holds(warp, wp, kind, params, n):
    p = make_profile(kind, params)
    m = euclidean(n, 1000.0) if warp == "euclidean" else comparison_model(n, make_profile(*wp), 1000.0)
    assert ricci_decay_check(m, p).passed
    _, ratio, est = bishop_gromov_ratio(m, p)
    assert np.max(np.diff(ratio)) <= 1e-10
    assert est.theta <= 1 + 1e-10
