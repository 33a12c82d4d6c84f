import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from reebtwist import twistcone as tc
from reebtwist.errors import InvalidInput, NoPrediction


def test_angular_less_examples():
    assert tc.angular_less((1, 0), (0, 1))
    assert not tc.angular_less((0, 1), (0, 1))
    assert tc.angular_less((1, -0.2), (-0.3, 1))


@pytest.mark.parametrize("theta,cls,inside", [
    ((-0.3, -0.3), (1, 0), True),
    ((1.0, 1.0), (1, 1), False),
    ((0.4142, 0.7321), (1, 1), True),
])
def test_in_twist_cone(theta, cls, inside):
    assert tc.in_twist_cone(tc.HomotopyClass(*cls), tc.TwistData(*theta)) is inside


def test_enumerate_examples():
    assert tc.enumerate_classes(tc.TwistData(1.0, 1.0), 10) == []
    got = {tuple(c) for c in tc.enumerate_classes(tc.TwistData(0.4142, 0.7321), 3)}
    assert {(1, 1), (1, 2)} <= got
    got = {tuple(c) for c in tc.enumerate_classes(tc.TwistData(-0.3, -0.3), 2)}
    assert {(1, 0), (0, 1)} <= got


def _brute_force(theta0, theta1, bound):
    lo = math.atan2(1.0, theta0)
    hi = math.atan2(theta1, 1.0)
    lo, hi = min(lo, hi), max(lo, hi)
    out = set()
    for p in range(-bound, bound + 1):
        for q in range(-bound, bound + 1):
            if (p, q) != (0, 0) and abs(p) + abs(q) <= bound and math.gcd(p, q) == 1:
                a = math.atan2(q, p)
                if lo < a < hi:
                    out.add((p, q))
    return out


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_enumeration_matches_arctangent_oracle_for_positive_data(t0, t1):
    data = tc.TwistData(t0, t1)
    got = {tuple(c) for c in tc.enumerate_classes(data, 8)}
    expected = _brute_force(t0, t1, 8)
    # classes within rounding of a boundary ray are excluded by the toolkit
    near = {c for c in expected ^ got
            if min(abs(math.atan2(c[1], c[0]) - math.atan2(1.0, t0)),
                   abs(math.atan2(c[1], c[0]) - math.atan2(t1, 1.0))) < 1e-9}
    assert expected ^ got <= near


def test_t1s2_prediction():
    data = tc.TwistData(variant="T1S2", eta0=0.4, eta1=0.4)
    p = tc.t1s2_prediction((1, 1), data)
    assert (p.contractible, p.wind0, p.wind1) == (False, Fraction(1, 2), Fraction(1, 2))
    p = tc.t1s2_prediction((1, 2), data)
    assert (p.contractible, p.wind0, p.wind1) == (True, 1, 2)
    p = tc.t1s2_prediction((3, 5), tc.TwistData(variant="T1S2", eta0=0.3, eta1=0.3))
    assert (p.contractible, p.wind0, p.wind1) == (False, Fraction(3, 2), Fraction(5, 2))
    with pytest.raises(NoPrediction):
        tc.t1s2_prediction((1, 0), tc.TwistData(variant="T1S2", eta0=0.4, eta1=0.4))


def test_satellite_interval():
    assert tc.satellite_interval(0.8, 5, 6)
    assert not tc.satellite_interval(1.0, 5, 6)
    assert tc.satellite_interval(1.4, 5, 4)
    with pytest.raises(InvalidInput):
        tc.satellite_interval(0.8, 2, 4)


@given(st.floats(0.1, 2.0), st.integers(1, 20), st.integers(1, 20))
def test_satellite_interval_is_strict_betweenness(rho, p, q):
    if math.gcd(p, q) != 1:
        return
    r = p / q
    assert tc.satellite_interval(rho, p, q) == (min(rho, 1) < r < max(rho, 1))
