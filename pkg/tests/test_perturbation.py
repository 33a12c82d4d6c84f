import math

import numpy as np
import pytest

from reebtwist import modelforms as mf
from reebtwist import perturbation as pt
from reebtwist.errors import EpsilonTooLarge, InvalidInput

CONVEX = (math.sqrt(2) - 1, math.sqrt(3) - 1)
CONCAVE = (2.0, 2.0)


@pytest.fixture(scope="module")
def concave_form():
    return mf.model_form(*CONCAVE)


@pytest.fixture(scope="module")
def pf(concave_form):
    return pt.perturbed_form(concave_form, (1, 1), 1e-3)


def test_identity_check_and_lattice_period(pf):
    c = pf.coords
    assert np.abs(c.identity_matrix() - np.eye(2)).max() < 1e-12
    assert abs(pt.lattice_period(c.dh_star) - c.L) < 1e-12 * c.L
    assert c.I[0] < c.theta_star < c.I[1]


def test_coordinates_map_to_model_hypersurface(pf):
    c = pf.coords
    z = c.to_sphere(np.array([c.theta_star, c.theta_star + 0.5 * c.half_width]),
                    np.array([0.3, 1.1]), np.array([0.2, -0.4]))
    for zi in z:
        assert mf.on_model_hypersurface(c.form, zi) < 1e-10


def test_theta_derivatives_against_finite_differences(pf):
    c = pf.coords
    th = c.theta_star + 0.2 * c.half_width
    h, h1, h2 = c.h(th)
    d = 1e-5
    hp, hm = c.h(th + d)[0], c.h(th - d)[0]
    assert np.abs((hp - hm) / (2 * d) - h1).max() < 1e-7
    assert np.abs((hp - 2 * h + hm) / d ** 2 - h2).max() < 1e-4


def test_bump_function():
    b = pt.SmoothBump(0.0, 0.3)
    assert b(0.05) == 1.0 and b(0.31) == 0.0
    x = np.linspace(-0.29, 0.29, 7)
    d = 1e-6
    assert np.abs((b(x + d) - b(x - d)) / (2 * d) - b(x, 1)).max() < 1e-6


def test_small_epsilon_field_reduces_to_shear(concave_form):
    pf = pt.perturbed_form(concave_form, (1, 1), 1e-10)
    c = pf.coords
    th = np.linspace(c.I[0] + 0.1 * c.half_width, c.I[1] - 0.1 * c.half_width, 9)
    x = np.linspace(0.0, c.L, 9)
    z = pt.reduced_field(pf)(th, x)
    d2 = c.deltas(th)[1][1]
    assert np.abs(z[..., 0]).max() < 1e-8
    assert np.abs(z[..., 1] + d2).max() < 1e-8


def test_reduced_field_is_the_projection(pf):
    assert pt.projection_defect(pf) < 1e-10


def test_rest_points_concave(pf):
    rest = pt.rest_points_and_linearization(pt.reduced_field(pf), pf)
    kinds = {r.name: r.kind for r in rest}
    assert kinds == {"max": "hyperbolic", "min": "elliptic"}
    for r in rest:
        assert abs(np.abs(r.eigenvalues).max() - r.predicted_modulus) < 1e-6 * r.predicted_modulus


def test_epsilon_quarter_halves_moduli(concave_form):
    mods = []
    for eps in (1e-3, 2.5e-4):
        p = pt.perturbed_form(concave_form, (1, 1), eps)
        rest = pt.rest_points_and_linearization(pt.reduced_field(p), p)
        mods.append([np.abs(r.eigenvalues).max() for r in rest])
    ratio = np.array(mods[0]) / np.array(mods[1])
    assert np.all(np.abs(ratio / 2 - 1) < 0.02)


def test_indices_follow_the_sign_of_delta2pp(pf):
    assert pf.coords.delta2_pp > 0
    idx = pt.surviving_orbit_indices(pf)
    assert (idx.mu_max, idx.mu_min) == (0, -1)
    convex = pt.perturbed_form(mf.model_form(*CONVEX), (1, 1), 1e-3)
    assert convex.coords.delta2_pp < 0
    idx = pt.surviving_orbit_indices(convex)
    assert (idx.mu_max, idx.mu_min) == (1, 0)


def test_sign_of_delta2pp_is_minus_orientation():
    for theta in (CONVEX, CONCAVE):
        form = mf.model_form(*theta)
        p = pt.perturbed_form(form, (1, 1), 1e-3)
        assert np.sign(p.coords.delta2_pp) == -form.profile.orientation()


def test_large_epsilon_is_reported():
    with pytest.raises(EpsilonTooLarge):
        p = pt.perturbed_form(mf.model_form(*CONVEX), (1, 1), 1e-2)
        pt.rest_points_and_linearization(pt.reduced_field(p), p)
    with pytest.raises(InvalidInput):
        pt.perturbed_form(mf.model_form(*CONVEX), (1, 1), 1.5)


def test_gradient_cylinders(pf):
    het = pt.gradient_cylinders(pf)
    L, T, eps = pf.coords.L, pf.coords.T, pf.epsilon
    assert len(het) == 2
    for h in het:
        assert h.limit_plus % L == pytest.approx(0.0, abs=1e-8) or \
            h.limit_plus == pytest.approx(L, abs=1e-8)
        assert h.limit_minus == pytest.approx(L / 2, abs=1e-8)
        assert h.monotone
        assert max(h.drift_plus, h.drift_minus) < 1e-6
        # a_eps - T(1 +- eps) s stays bounded on each end
        n = len(h.s) // 10
        lin_p = h.a[-n:] - T * (1 + eps) * h.s[-n:]
        lin_m = h.a[:n] - T * (1 - eps) * h.s[:n]
        assert np.ptp(lin_p) < 1e-3 and np.ptp(lin_m) < 1e-3


def test_closed_orbits(pf):
    orbits = pt.closed_orbits(pf)
    assert len(orbits) == 2
    T, eps = pf.coords.T, pf.epsilon
    periods = sorted(o.period for o in orbits)
    assert periods == pytest.approx([T * (1 - eps), T * (1 + eps)], rel=1e-5)
    assert all(tuple(o.links) == (1, 1) for o in orbits)
