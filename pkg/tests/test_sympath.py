import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reebtwist import sympath as sp
from reebtwist.errors import DegeneratePath, InvalidInput, IterateDegeneracy


def test_constant_rotation_generator():
    path = sp.evolve_path(sp.constant_loop(math.pi * np.eye(2)))
    t = path.times
    expected = np.stack([np.stack([np.cos(math.pi * t), -np.sin(math.pi * t)], -1),
                         np.stack([np.sin(math.pi * t), np.cos(math.pi * t)], -1)], 1)
    assert np.abs(path.values - expected).max() < 1e-12


def test_zero_generator_is_identity():
    path = sp.evolve_path(sp.constant_loop(np.zeros((2, 2))), k=3)
    assert path.times[-1] == 3
    assert np.abs(path.values - np.eye(2)).max() < 1e-14


def test_hyperbolic_shear_eigenvalues():
    path = sp.evolve_path(sp.constant_loop([[0.0, 1.0], [1.0, 0.0]]))
    ev = np.sort(np.linalg.eigvals(path.end).real)
    assert np.allclose(ev, [math.exp(-1), math.e], atol=1e-9)


def test_winding_interval_examples():
    I = sp.winding_interval(sp.evolve_path(sp.rotation_loop(0.3)))
    assert abs(I.lo - 0.3) < 1e-12 and abs(I.hi - 0.3) < 1e-12
    I = sp.winding_interval(sp.evolve_path(sp.constant_loop(np.zeros((2, 2)))))
    assert abs(I.lo) < 1e-12 and abs(I.hi) < 1e-12


def test_hyperbolic_interval_against_brute_force():
    path = sp.evolve_path(sp.hyperbolic_loop(0, 1.0))
    I = sp.winding_interval(path)
    assert I.contains(0.0) and I.width < 0.5
    # brute force: track many directions through every sample
    s = np.linspace(0, 1, 2001)
    brute = (path.track(s)[-1] - path.track(s)[0])
    assert abs(brute.min() - I.lo) < 1e-6 and abs(brute.max() - I.hi) < 1e-6


@pytest.mark.parametrize("gen,mu", [
    (sp.rotation_loop(0.5), 1),
    (sp.rotation_loop(1.7), 3),
    (sp.hyperbolic_loop(0, 1.0), 0),
])
def test_cz_examples(gen, mu):
    assert sp.cz_index_geometric(sp.evolve_path(gen)) == mu


def test_identity_is_degenerate():
    with pytest.raises(DegeneratePath):
        sp.cz_index_geometric(sp.evolve_path(sp.constant_loop(np.zeros((2, 2)))))


def test_zero_generator_spectrum():
    spec = sp.asymptotic_spectrum(sp.constant_loop(np.zeros((2, 2))), window=2)
    assert (spec.wind_minus, spec.wind_plus, spec.p) == (-1, 0, 1)
    for e, w in zip(spec.eigenvalues, spec.windings):
        assert abs(e - 2 * math.pi * w) < 1e-9
    assert list(spec.windings).count(0) == 2


def test_rotation_generator_spectrum_matches_geometric_index():
    rep = sp.index_report(sp.rotation_loop(0.5))
    assert rep.mu_geometric == rep.mu_analytic == 1


def test_positive_hyperbolic_spectrum_windings_equal():
    spec = sp.asymptotic_spectrum(sp.hyperbolic_loop(1, 0.7))
    assert spec.wind_minus == spec.wind_plus == 1


@pytest.mark.parametrize("wm,p,mu", [(0, 1, 1), (-1, 1, -1), (2, 0, 4)])
def test_analytic_formula(wm, p, mu):
    spec = sp.SpectralDecomposition((), (), wm, wm + p, p, 0)
    assert sp.cz_index_analytic(spec) == mu


def test_iterate_examples():
    prof = sp.iterate_index_profile(sp.rotation_loop(math.sqrt(2) - 1), 5)
    assert [r[1] for r in prof.rows] == [1, 1, 3, 3, 5]
    prof = sp.iterate_index_profile(sp.hyperbolic_loop(0, 1.0), 6)
    assert all(r[1] == 0 for r in prof.rows)
    prof = sp.iterate_index_profile(sp.hyperbolic_loop(0, 1.0, negative=True), 6)
    for k, mu, wm, wp in prof.rows:
        assert mu == k
        if k % 2 == 0:
            assert wm == wp == k // 2


def test_root_of_unity_iterate_is_rejected():
    with pytest.raises(IterateDegeneracy) as exc:
        sp.iterate_index_profile(sp.rotation_loop(0.25), 6)
    assert exc.value.k == 4


def test_rotation_number_examples():
    assert abs(sp.rotation_number(sp.rotation_loop(0.3)).value - 0.3) < 1e-12
    assert abs(sp.rotation_number(sp.hyperbolic_loop(0, 1.0)).value) < 1e-5


def test_iterate_index_agrees_with_extended_path():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 10:
        path = sp.evolve_path(sp.random_loop(rng, amplitude=1.5))
        for k in (2, 3, 5):
            try:
                direct = sp.cz_index_geometric(path.iterate(k))
            except DegeneratePath:
                continue
            assert sp.iterate_cz_index(path, k) == direct
            checked += 1


def test_strongly_hyperbolic_iterates_do_not_overflow():
    path = sp.evolve_path(sp.hyperbolic_loop(1, 12.0))
    assert sp.iterate_cz_index(path, 200) == 400


def test_invalid_inputs():
    with pytest.raises(InvalidInput):
        sp.evolve_path(sp.rotation_loop(0.3), k=0)
    with pytest.raises(InvalidInput):
        sp.evolve_path(sp.rotation_loop(0.3), tol=-1)
    with pytest.raises(InvalidInput):
        sp.elliptic_loop(0.3, P=[[2.0, 0.0], [0.0, 1.0]])


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0).filter(lambda a: abs(a - round(a)) > 1e-3))
def test_rotation_index_formula(alpha):
    mu = sp.cz_index_geometric(sp.evolve_path(sp.rotation_loop(alpha)))
    assert mu == 2 * math.floor(alpha) + 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_random_paths_stay_symplectic_and_indices_agree(seed):
    rng = np.random.default_rng(seed)
    gen = sp.random_loop(rng)
    path = sp.evolve_path(gen)
    assert np.abs(np.linalg.det(path.values) - 1).max() < 1e-9
    rep = sp.index_report(gen)
    if rep.mu_geometric is not None:
        assert rep.mu_geometric == rep.mu_analytic
        assert rep.interval.width < 0.5


@given(st.floats(-1e6, 1e6))
def test_wrap_half_range(x):
    w = sp.wrap_half(x)
    assert -0.5 <= w <= 0.5
    assert abs((x - w) - round(x - w)) < 1e-6
