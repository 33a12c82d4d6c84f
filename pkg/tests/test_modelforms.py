import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reebtwist import modelforms as mf
from reebtwist.errors import NoCone, NoTorus


def test_resonant_data_has_no_cone():
    with pytest.raises(NoCone):
        mf.build_profile(1.0, 1.0)


@pytest.mark.parametrize("theta", [(0.4142, 0.7321), (-0.3, -0.3), (2.0, 2.0)])
def test_profile_passes_grid_checks(theta):
    prof = mf.build_profile(*theta)
    checks = prof.checks()
    assert all(checks.values()), checks


def test_profile_is_deterministic():
    a = mf.build_profile(0.4142, 0.7321)
    b = mf.build_profile(0.4142, 0.7321)
    assert np.array_equal(a.coeffs, b.coeffs)


def test_rates_at_endpoint_are_proportional_to_theta0():
    prof = mf.build_profile(0.4142, 0.7321)
    r0, r1 = mf.reeb_field_model(prof, 1.0)
    assert abs(r0 / r1 - 0.4142) < 1e-12 and r1 > 0


def test_rates_equal_where_normal_is_diagonal():
    form = mf.model_form(0.4142, 0.7321)
    torus = mf.locate_torus(form, (1, 1))
    r0, r1 = mf.reeb_field_model(form.profile, torus.t_star)
    assert abs(r0 - r1) < 1e-12 * abs(r0)


def test_locate_torus_is_unique_and_ordered():
    form = mf.model_form(0.4142, 0.7321)
    a = mf.locate_torus(form, (1, 1))
    b = mf.locate_torus(form, (1, 2))
    assert a.t_star != b.t_star
    ends = sorted(float(form.profile.normal_angle(t)) for t in (0.0, 1.0))
    for tor in (a, b):
        ang = float(form.profile.normal_angle(tor.t_star))
        assert ends[0] < ang < ends[1]
    # bisection oracle on the normal angle
    g = lambda t: float(form.profile.normal_angle(t)) - math.atan2(2, 1)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (g(lo) < 0) == (g(mid) < 0):
            lo = mid
        else:
            hi = mid
    assert abs(b.t_star - 0.5 * (lo + hi)) < 1e-12


def test_outside_class_has_no_torus():
    form = mf.model_form(0.4142, 0.7321)
    with pytest.raises(NoTorus):
        mf.locate_torus(form, (1, 0))


def test_period_candidates_agree():
    form = mf.model_form(math.sqrt(2) - 1, math.sqrt(3) - 1)
    tor = mf.locate_torus(form, (2, 3))
    a0, a1 = tor.rates
    # both angles close after one period
    assert abs(a0 * tor.period / (2 * math.pi) - 2) < 1e-9
    assert abs(a1 * tor.period / (2 * math.pi) - 3) < 1e-9


def test_orbit_family_images_agree():
    form = mf.model_form(0.4142, 0.7321)
    tor = mf.locate_torus(form, (1, 1))
    a = mf.orbit_on_torus(tor, 0.0, 0.0)
    b = mf.orbit_on_torus(tor, 0.7, 0.7)
    za, zb = a.base.z, b.base.z
    # rotate the first copy by the common phase and compare pointwise
    rot = np.array([[math.cos(0.7), -math.sin(0.7)], [math.sin(0.7), math.cos(0.7)]])
    shifted = np.concatenate([za[:, :2] @ rot.T, za[:, 2:] @ rot.T], axis=1)
    assert np.abs(shifted - zb).max() < 1e-12
    assert a.gap < 1e-12


@pytest.mark.parametrize("theta,comp,k,mu", [
    ((0.4142, 0.7321), "L0", 1, 3),
    ((0.4142, 0.7321), "L0", 3, 9),
    ((-0.3, -0.3), "L1", 1, 1),
])
def test_model_cz_index(theta, comp, k, mu):
    assert mf.model_cz_index(mf.model_form(*theta), comp, k) == mu


def test_model_scaling_points_lie_on_hypersurface():
    form = mf.model_form(0.4142, 0.7321)
    rng = np.random.default_rng(3)
    z = rng.normal(size=(50, 4))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    for zi in z:
        assert mf.on_model_hypersurface(form, zi) < 1e-10


def test_model_scaling_gradient_matches_finite_differences():
    form = mf.model_form(math.sqrt(2) - 1, math.sqrt(3) - 1)
    sc = mf.model_scaling(form)
    z = np.array([0.5, 0.2, -0.4, 0.6])
    g = sc.gradient(z)
    h = 1e-6
    fd = np.array([(sc.value(z + h * e) - sc.value(z - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.abs(g - fd).max() < 1e-7


def test_action_spectrum_is_sorted_and_positive():
    form = mf.model_form(math.sqrt(2) - 1, math.sqrt(3) - 1)
    spec = mf.action_spectrum(form, 12.0)
    periods = [e.period for e in spec]
    assert periods == sorted(periods) and periods[0] > 0


@settings(max_examples=6, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_generic_convex_data_build_valid_profiles(t0, t1):
    prof = mf.build_profile(t0, t1)
    assert prof.is_valid()
    assert prof.orientation() in (-1, 1)
