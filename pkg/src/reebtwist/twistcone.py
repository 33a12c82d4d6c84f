"""Angular order on rays, non-resonance cones and guaranteed orbit classes."""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidInput, NoPrediction

GUARD = 1e-12


@dataclass(frozen=True, order=True)
class HomotopyClass:
    p: int
    q: int

    @property
    def coprime(self):
        return math.gcd(abs(self.p), abs(self.q)) == 1

    def __iter__(self):
        return iter((self.p, self.q))

    def __getitem__(self, i):
        return (self.p, self.q)[i]


@dataclass(frozen=True)
class TwistData:
    """Boundary data of a twist cone.

    ``variant="S3"`` uses ``theta0, theta1`` (rotation offsets of the Hopf
    link components); ``variant="T1S2"`` uses ``eta0, eta1``.
    """

    theta0: float = None
    theta1: float = None
    variant: str = "S3"
    eta0: float = None
    eta1: float = None

    def __post_init__(self):
        if self.variant == "S3":
            if self.theta0 is None or self.theta1 is None:
                raise InvalidInput("S3 twist data needs theta0 and theta1")
        elif self.variant == "T1S2":
            if self.eta0 is None or self.eta1 is None:
                raise InvalidInput("T1S2 twist data needs eta0 and eta1")
        else:
            raise InvalidInput(f"unknown variant {self.variant!r}")

    def boundaries(self):
        """Boundary rays ``(lower-index ray, upper-index ray)``."""
        if self.variant == "S3":
            return (self.theta0, 1.0), (1.0, self.theta1)
        return (self.eta0, 1.0), (1.0, self.eta1)


def _admissible(a):
    return a[0] > 0 or a[1] > 0


def argument(a):
    if not _admissible(a):
        raise InvalidInput(f"pair {tuple(a)} is outside {{s > 0 or t > 0}}")
    return math.atan2(a[1], a[0])


def angular_less(a, b, guard=0.0):
    """True iff the argument of ``b`` strictly exceeds that of ``a``."""
    return argument(b) - argument(a) > guard


def _cone_position(cls, data):
    """Return (inside, within_guard) for an admissible class."""
    a, b = data.boundaries()
    ang = argument(cls)
    lo, hi = sorted((argument(a), argument(b)))
    near = min(abs(ang - lo), abs(ang - hi)) <= GUARD
    return lo + GUARD < ang < hi - GUARD, near


def in_twist_cone(cls, data):
    """Non-resonance test ``(theta0,1) < (p,q) < (1,theta1)`` or the
    reverse order.  Classes within the guard band of a boundary ray are
    excluded with a warning."""
    cls = HomotopyClass(*cls)
    if not cls.coprime:
        raise InvalidInput(f"class {tuple(cls)} is not relatively prime")
    if not _admissible(cls):
        return False
    inside, near = _cone_position(cls, data)
    if near:
        warnings.warn(f"class {tuple(cls)} lies on a boundary ray of the cone; excluded")
    return inside


def enumerate_classes(data, bound):
    """Relatively prime classes with ``|p|+|q| <= bound`` inside the cone,
    sorted by ``|p|+|q|`` and then by argument."""
    if bound < 1:
        raise InvalidInput("bound must be at least 1")
    out = []
    for p in range(-bound, bound + 1):
        for q in range(-bound, bound + 1):
            if (p, q) == (0, 0) or abs(p) + abs(q) > bound:
                continue
            if math.gcd(abs(p), abs(q)) != 1 or not _admissible((p, q)):
                continue
            inside, near = _cone_position((p, q), data)
            if inside:
                out.append(HomotopyClass(p, q))
            elif near:
                warnings.warn(f"class {(p, q)} lies on a boundary ray of the cone; excluded")
    out.sort(key=lambda c: (abs(c.p) + abs(c.q), argument(c)))
    return out


@dataclass(frozen=True)
class T1S2Prediction:
    contractible: bool
    wind0: Fraction
    wind1: Fraction


def t1s2_prediction(cls, data):
    """Homotopy type and windings of the orbit guaranteed in the unit
    tangent bundle for a class in the eta-cone."""
    cls = HomotopyClass(*cls)
    if data.variant != "T1S2":
        raise InvalidInput("t1s2 prediction needs T1S2 twist data")
    if not in_twist_cone(cls, data):
        raise NoPrediction(f"class {tuple(cls)} is outside the twist cone")
    if (cls.p + cls.q) % 2 == 0:
        return T1S2Prediction(False, Fraction(cls.p, 2), Fraction(cls.q, 2))
    return T1S2Prediction(True, Fraction(cls.p), Fraction(cls.q))


def satellite_interval(rho, p, q):
    """True iff ``p/q`` lies strictly between ``rho`` and 1."""
    if q == 0:
        raise InvalidInput("q must be nonzero")
    if math.gcd(abs(p), abs(q)) != 1:
        raise InvalidInput(f"({p}, {q}) is not relatively prime")
    r = Fraction(p, q)
    return min(rho, 1.0) < r < max(rho, 1.0)
