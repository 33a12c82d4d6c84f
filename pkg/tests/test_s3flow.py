import math

import numpy as np
import pytest

from reebtwist import modelforms as mf
from reebtwist import s3flow
from reebtwist.errors import InvalidInput

THETA = (math.sqrt(2) - 1, math.sqrt(3) - 1)


@pytest.fixture(scope="module")
def model():
    form = mf.model_form(*THETA)
    return form, mf.model_scaling(form)


def _first_coordinate_scaling():
    f = lambda Z: 1.0 + 0.5 * np.asarray(Z)[..., 0]

    def g(Z):
        Z = np.asarray(Z, dtype=float)
        out = np.zeros_like(Z)
        out[..., 0] = 0.5
        return out
    return s3flow.ContactScaling(f, g, "first-coordinate")


def test_check_adapted_examples(model):
    assert s3flow.check_adapted(s3flow.unit_scaling())
    assert s3flow.check_adapted(model[1])
    assert not s3flow.check_adapted(_first_coordinate_scaling())


def test_hopf_flow_returns_after_pi():
    z0 = np.array([0.0, 0.0, 1.0, 0.0])
    traj = s3flow.integrate_reeb(s3flow.unit_scaling(), z0, math.pi)
    assert np.linalg.norm(traj.z[-1] - z0) < 1e-9
    # c(t) = c(0) e^{2it}
    t = traj.t
    expected = np.stack([0 * t, 0 * t, np.cos(2 * t), np.sin(2 * t)], axis=1)
    assert np.abs(traj.z - expected).max() < 1e-9


def test_reeb_normalization(model):
    z0 = mf.locate_torus(model[0], (1, 1)).on_sphere()
    traj = s3flow.integrate_reeb(model[1], z0, 2.0)
    assert s3flow.reeb_normalization_defect(model[1], traj) < 1e-10


def test_model_flow_matches_closed_form(model):
    tor = mf.locate_torus(model[0], (2, 3))
    closed = mf.orbit_on_torus(tor, samples=256)
    traj = s3flow.dense_orbit(model[1], tor.on_sphere(), tor.period, 256)
    assert np.abs(traj.z - closed.base.z).max() < 1e-6
    assert tuple(s3flow.linking_numbers(traj)) == (2, 3)


def test_transverse_rotation_numbers(model):
    for comp, theta in zip(("L0", "L1"), THETA):
        orbit = s3flow.component_orbit(model[1], comp)
        rho = s3flow.transverse_rotation_number(model[1], orbit).value
        assert abs(rho - (1 + theta)) < 1e-6


def test_winding_bounds_example():
    form = mf.model_form(0.4142, 0.7321)
    wb = s3flow.asymptotic_winding_bounds(mf.model_scaling(form), "L0", 5)
    assert wb.wind_lt0 == 2 and wb.bounds_verified


def test_winding_bounds_hyperbolic_test_form():
    sc = s3flow.hyperbolic_test_scaling()
    wb = s3flow.asymptotic_winding_bounds(sc, "L0", 3)
    assert wb.orbit_type == "positive-hyperbolic"
    assert wb.wind_lt0 == wb.wind_geq0 and wb.bounds_verified


def test_shooting_hopf_flow():
    orbit = s3flow.find_orbit_shooting(s3flow.unit_scaling(), [0.6, 0.1, 0.7, -0.2], 3.0)
    assert orbit is not None
    assert abs(orbit.period - math.pi) < 1e-8
    assert tuple(orbit.cls) == (1, 1)


def test_shooting_model_torus(model):
    tor = mf.locate_torus(model[0], (1, 2))
    seed = tor.on_sphere() + 1e-4 * np.array([1.0, -1.0, 0.5, 0.3])
    orbit = s3flow.find_orbit_shooting(model[1], seed / np.linalg.norm(seed), tor.period * 1.001)
    assert orbit is not None
    assert abs(orbit.period - tor.period) < 1e-8
    assert tuple(orbit.cls) == (1, 2)


def test_invalid_inputs():
    with pytest.raises(InvalidInput):
        s3flow.integrate_reeb(s3flow.unit_scaling(), [2.0, 0, 0, 0], 1.0)
    with pytest.raises(InvalidInput):
        s3flow.find_orbit_shooting(s3flow.unit_scaling(), [1.0, 0, 0, 0], 3.0)
