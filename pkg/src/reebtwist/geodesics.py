"""Geodesic flows on the 2-sphere and the double cover of its unit tangent bundle.

Surfaces of revolution are given by a meridian ``u -> (R(u), Z(u))`` with
embedding ``(R cos phi, R sin phi, Z)``.  Rotation numbers of closed
geodesics come from the Jacobi equation ``y'' = -K y``; satellites of the
equator are found by shooting on the Clairaut constant ``R^2 phi'``.  The
map ``D: S^3 -> T^1 S^2`` is the explicit quadratic double cover; loops in
the complement of ``l = D(L0) u D(L1)`` are lifted to ``S^3`` to read off
their half-integer windings.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (ConsistencyFailure, InvalidInput, LiftDiscontinuity, NotFound, NumericalFailure,
                     ShootingDegeneracy, TooClose)
from .sympath import (TWO_PI, birkhoff_sum, constant_loop, evolve_path, sampled_loop)
from .twistcone import satellite_interval

ODE_TOL = 1e-12


# --------------------------------------------------------------------------
# surfaces of revolution


@dataclass(frozen=True, eq=False)
class SurfaceMetric:
    """Surface of revolution with meridian ``(R(u), Z(u))`` for ``u`` in
    ``u_range``; ``derivs(u)`` returns ``(R, R', R'', Z', Z'')``."""

    kind: str
    derivs: object
    u_range: tuple
    equator_u: float = 0.0
    params: dict = field(default_factory=dict)

    def R(self, u):
        return self.derivs(u)[0]

    def E(self, u):
        _, r1, _, z1, _ = self.derivs(u)
        return r1 * r1 + z1 * z1

    def curvature(self, u):
        """Gaussian curvature ``-(R'' E - R' E'/2) / (R E^2)``."""
        r, r1, r2, z1, z2 = self.derivs(u)
        E = r1 * r1 + z1 * z1
        Eu = 2 * (r1 * r2 + z1 * z2)
        return -(r2 * E - 0.5 * r1 * Eu) / (r * E * E)

    def embedding(self, u, phi):
        u = np.asarray(u, float)
        phi = np.asarray(phi, float)
        r = self.R(u)
        z = self._Z(u)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)

    def _Z(self, u):
        return self.params["Z"](u)

    @property
    def equator_length(self):
        return TWO_PI * float(self.R(self.equator_u))


def ellipsoid(equatorial, polar):
    """Ellipsoid of revolution ``R = A cos u, Z = B sin u``."""
    A, B = float(equatorial), float(polar)
    if A <= 0 or B <= 0:
        raise InvalidInput("semi-axes must be positive")

    def derivs(u):
        c, s = np.cos(u), np.sin(u)
        return A * c, -A * s, -A * c, B * c, -B * s

    return SurfaceMetric("ellipsoid", derivs, (-math.pi / 2, math.pi / 2), 0.0,
                         {"equatorial": A, "polar": B, "Z": lambda u: B * np.sin(u)})


def round_sphere():
    m = ellipsoid(1.0, 1.0)
    return SurfaceMetric("round", m.derivs, m.u_range, 0.0, dict(m.params))


def spheroid(a, c):
    """Spheroid with equatorial radius ``a`` and equatorial curvature
    ``c^2 / a^4`` (polar semi-axis ``a^2 / c``), so the equator has inverse
    rotation number ``c / a``."""
    if a <= 0 or c <= 0:
        raise InvalidInput("spheroid parameters must be positive")
    m = ellipsoid(a, a * a / c)
    params = dict(m.params, a=float(a), c=float(c))
    return SurfaceMetric("spheroid", m.derivs, m.u_range, 0.0, params)


def profile_surface(u, R, Z):
    """Surface from meridian samples, interpolated by cubic splines.  The
    equator is the interior maximum of ``R``."""
    u = np.asarray(u, float)
    R = np.asarray(R, float)
    Z = np.asarray(Z, float)
    if u.ndim != 1 or u.size < 8 or not np.all(np.diff(u) > 0):
        raise InvalidInput("profile needs at least 8 samples with increasing u")
    if np.any(R[1:-1] <= 0):
        raise InvalidInput("profile radius must be positive in the interior")
    sr, sz = CubicSpline(u, R), CubicSpline(u, Z)
    dr, ddr, dz, ddz = sr.derivative(), sr.derivative(2), sz.derivative(), sz.derivative(2)

    def derivs(x):
        return sr(x), dr(x), ddr(x), dz(x), ddz(x)

    i = int(np.argmax(R))
    if i in (0, u.size - 1):
        raise InvalidInput("profile radius has no interior maximum")
    u_eq = brentq(lambda x: float(dr(x)), u[max(i - 1, 0)], u[min(i + 1, u.size - 1)])
    return SurfaceMetric("profile", derivs, (float(u[0]), float(u[-1])), float(u_eq),
                         {"Z": sz})


def parse_metric(spec):
    """``round``, ``spheroid:a,c`` or ``profile:<file>`` (columns u, R, Z)."""
    if spec == "round":
        return round_sphere()
    if spec.startswith("spheroid:"):
        try:
            a, c = (float(v) for v in spec.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise InvalidInput(f"bad spheroid specification {spec!r}") from exc
        return spheroid(a, c)
    if spec.startswith("profile:"):
        data = np.loadtxt(spec.split(":", 1)[1], delimiter=",", ndmin=2)
        return profile_surface(data[:, 0], data[:, 1], data[:, 2])
    raise InvalidInput(f"unknown metric {spec!r}")


# --------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Unit-speed geodesic sampled at times ``t``; ``state`` columns are
    ``(u, phi, u', phi')``."""

    metric: SurfaceMetric
    t: np.ndarray
    state: np.ndarray
    period: float = None
    clairaut_constant: float = None
    crossings: int = None

    @property
    def points(self):
        return self.metric.embedding(self.state[:, 0], self.state[:, 1])

    def speed_defect(self):
        u, _, du, dphi = self.state.T
        return float(np.abs(self.metric.E(u) * du ** 2 + self.metric.R(u) ** 2 * dphi ** 2 - 1).max())

    def clairaut_defect(self):
        u, dphi = self.state[:, 0], self.state[:, 3]
        c = self.metric.R(u) ** 2 * dphi
        return float(np.abs(c - c[0]).max())


def _geodesic_rhs(metric):
    def rhs(t, y):
        u, _, du, dphi = y
        r, r1, r2, z1, z2 = metric.derivs(u)
        E = r1 * r1 + z1 * z1
        Eu = 2 * (r1 * r2 + z1 * z2)
        return [du, dphi, (r * r1 * dphi * dphi - 0.5 * Eu * du * du) / E, -2 * r1 * du * dphi / r]
    return rhs


def initial_state(metric, u0, phi0, angle):
    """Unit-speed state at ``(u0, phi0)`` making ``angle`` with the parallel."""
    return np.array([u0, phi0, math.sin(angle) / math.sqrt(float(metric.E(u0))),
                     math.cos(angle) / float(metric.R(u0))])


def integrate_geodesic(metric, state0, t_end, samples=2001, tol=ODE_TOL, events=None):
    t_eval = np.linspace(0.0, t_end, samples)
    sol = solve_ivp(_geodesic_rhs(metric), (0.0, t_end), state0, method="DOP853", rtol=tol,
                    atol=tol * 1e-2, t_eval=t_eval, events=events, dense_output=True)
    if sol.status < 0:
        raise NumericalFailure(sol.message)
    return sol


def equator(metric, samples=2001):
    T = metric.equator_length
    sol = integrate_geodesic(metric, initial_state(metric, metric.equator_u, 0.0, 0.0), T, samples)
    return Geodesic(metric, sol.t, sol.y.T, T, float(metric.R(metric.equator_u)), 0)


# --------------------------------------------------------------------------
# rotation numbers


@dataclass(frozen=True)
class GeodesicRotation:
    value: float
    error: float
    periods: int
    plain: float


def jacobi_generator(geo, samples=256):
    """Hamiltonian loop of ``(y, y')`` over one period, rescaled to [0, 1].

    ``y'' = -K y`` is ``phi' = J S phi`` with ``S = T diag(-K, -1)``.
    """
    T = geo.period
    if T is None:
        raise InvalidInput("geodesic is not closed")
    metric = geo.metric
    u = geo.state[:, 0]
    if np.ptp(u) < 1e-14:
        K = float(metric.curvature(u[0]))
        return constant_loop(np.diag([-T * K, -T]), name="jacobi")
    s = np.arange(samples) / samples
    sol = integrate_geodesic(metric, geo.state[0], T, samples=2)
    uu = sol.sol(s * T)[0]
    K = metric.curvature(uu)
    return sampled_loop(s, -T * K, np.zeros(samples), np.full(samples, -T), name="jacobi")


def jacobi_rotation_number(geo, horizon=None, tol=1e-12):
    """Inverse rotation number ``T lim theta(t) / (2 pi t)`` of a closed geodesic.

    ``theta`` is the clockwise phase of ``y + i y'`` for a Jacobi field
    ``y``, so positive curvature gives positive rotation.  The phase over
    ``horizon`` (default ``2^30`` periods, at least 50) is obtained by binary
    composition of the one-period circle map; the value is Richardson
    extrapolated between ``N`` and ``2N`` periods, whose difference is the
    error estimate.
    """
    T = geo.period
    n = 2 ** 30 if horizon is None else int(math.ceil(horizon / T))
    if n < 50:
        raise InvalidInput("horizon must cover at least 50 periods")
    path = evolve_path(jacobi_generator(geo), 1, tol)
    r1 = -birkhoff_sum(path, n) / n
    r2 = -birkhoff_sum(path, 2 * n) / (2 * n)
    return GeodesicRotation(2 * r2 - r1, abs(r2 - r1) + 1.0 / (2 * n), 2 * n, r2)


def floquet_rotation(geo, tol=ODE_TOL):
    """Rotation number from the one-period monodromy of ``y'' = -K y``.

    The fractional part is ``arccos(tr / 2) / 2 pi`` (elliptic case); the
    branch is the candidate nearest to the clockwise phase advance of
    ``y(0) = 1, y'(0) = 0`` over one period.
    """
    metric, T = geo.metric, geo.period
    grhs = _geodesic_rhs(metric)

    def rhs(t, w):
        g = grhs(t, w[:4])
        K = metric.curvature(w[0])
        return list(g) + [w[5], -K * w[4], w[7], -K * w[6]]

    y0 = list(geo.state[0]) + [1.0, 0.0, 0.0, 1.0]
    sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    ts = np.linspace(0.0, T, 4001)
    w = sol.sol(ts)
    phase = -np.unwrap(np.arctan2(w[5], w[4]))
    advance = (phase[-1] - phase[0]) / TWO_PI
    M = np.array([[w[4, -1], w[6, -1]], [w[5, -1], w[7, -1]]])
    tr = float(np.trace(M))
    if abs(tr) >= 2:
        raise NumericalFailure("monodromy is not elliptic")
    f = math.acos(tr / 2) / TWO_PI
    m = math.floor(advance)
    cands = [m + f, m + 1 - f, m - f, m + 1 + f]
    return min(cands, key=lambda c: abs(c - advance))


# --------------------------------------------------------------------------
# satellites of the equator


def _half_oscillation(metric, C, tol=ODE_TOL):
    """Time and azimuth advance between consecutive equator crossings of
    the geodesic leaving the equator with Clairaut constant ``C``."""
    R0 = float(metric.R(metric.equator_u))
    angle = math.acos(C / R0)
    y0 = initial_state(metric, metric.equator_u, 0.0, angle)
    ue = metric.equator_u

    def cross(t, y):
        return y[0] - ue
    cross.terminal = True
    cross.direction = -1
    span = 50 * R0 * math.pi
    sol = solve_ivp(_geodesic_rhs(metric), (0.0, span), y0, method="DOP853", rtol=tol,
                    atol=tol * 1e-2, events=cross)
    if sol.status != 1:
        raise NumericalFailure("geodesic did not return to the equator")
    return float(sol.t_events[0][0]), float(sol.y_events[0][0][1])


def crossing_ratio(metric, C):
    """``pi / (azimuth advance per half oscillation)``; tends to the
    equator's rotation number as ``C -> R(equator)`` and to 1 as ``C -> 0``."""
    return math.pi / _half_oscillation(metric, C)[1]


def clairaut_advance(metric, C):
    """Quadrature ``2 int_0^{u_m} C sqrt(E) / (R sqrt(R^2 - C^2)) du`` on the
    upper half, with ``R(u_m) = C``."""
    ue = metric.equator_u
    hi = metric.u_range[1]
    um = brentq(lambda u: float(metric.R(u)) - C, ue, hi - 1e-15, xtol=1e-15)

    def integrand(s):
        u = ue + (um - ue) * math.sin(s)
        r = float(metric.R(u))
        return C * math.sqrt(float(metric.E(u))) / (r * math.sqrt(max(r * r - C * C, 1e-300))) \
            * (um - ue) * math.cos(s)

    val, _ = quad(integrand, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=200)
    if metric.kind in ("round", "spheroid", "ellipsoid"):
        return 2 * val
    lo = metric.u_range[0]
    um2 = brentq(lambda u: float(metric.R(u)) - C, lo + 1e-15, ue, xtol=1e-15)

    def integrand2(s):
        u = ue - (ue - um2) * math.sin(s)
        r = float(metric.R(u))
        return C * math.sqrt(float(metric.E(u))) / (r * math.sqrt(max(r * r - C * C, 1e-300))) \
            * (ue - um2) * math.cos(s)

    val2, _ = quad(integrand2, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val + val2


def find_satellite_revolution(metric, p, q, rho=None, grid=12, tol=1e-10):
    """Closed ``(p, q)``-satellite of the equator on a surface of revolution.

    Raises
    ------
    NotFound
        If ``p/q`` is not strictly between the equator's rotation number and 1.
    ShootingDegeneracy
        If the crossing ratio is not monotone in the Clairaut constant.
    """
    if math.gcd(abs(p), abs(q)) != 1 or q <= 0 or p <= 0:
        raise InvalidInput("need relatively prime p, q > 0")
    if rho is None:
        rho = jacobi_rotation_number(equator(metric)).value
    if not satellite_interval(rho, p, q):
        raise NotFound(f"{p}/{q} is not strictly between {rho:.6f} and 1")
    R0 = float(metric.R(metric.equator_u))
    Cs = R0 * np.linspace(0.05, 0.98, grid)
    ratios = np.array([crossing_ratio(metric, C) for C in Cs])
    d = np.diff(ratios)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ShootingDegeneracy("crossing ratio is not monotone in the Clairaut constant")
    target = p / q
    g = lambda C: crossing_ratio(metric, C) - target
    nodes = np.concatenate([[1e-3 * R0], Cs, [R0 * (1 - 1e-6)]])
    vals = np.concatenate([[g(nodes[0])], ratios - target, [g(nodes[-1])]])
    idx = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if idx.size != 1:
        raise ShootingDegeneracy(f"crossing ratio brackets {p}/{q} {idx.size} times")
    lo, hi = nodes[idx[0]], nodes[idx[0] + 1]
    C = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    if abs(g(C)) > tol:
        raise NumericalFailure(f"crossing ratio residual {abs(g(C)):.2e}")
    half_t, _ = _half_oscillation(metric, C)
    period = 2 * p * half_t
    R0 = float(metric.R(metric.equator_u))
    y0 = initial_state(metric, metric.equator_u, 0.0, math.acos(C / R0))
    ue = metric.equator_u

    def cross(t, y):
        return y[0] - ue
    samples = max(2001, 400 * p)
    sol = integrate_geodesic(metric, y0, period, samples, events=cross)
    inner = [t for t in sol.t_events[0] if 1e-9 * period < t < period * (1 - 1e-9)]
    crossings = len(inner) + 1
    geo = Geodesic(metric, sol.t, sol.y.T, period, C, crossings)
    gap = np.linalg.norm(geo.points[-1] - geo.points[0])
    if gap > 1e-6:
        raise NumericalFailure(f"satellite does not close (gap {gap:.2e})")
    return geo


# --------------------------------------------------------------------------
# double cover S^3 -> T^1 S^2


def double_cover(z):
    """``D(z) = (x, v)`` for ``z = (q0, p0, q1, p1)``; accepts arrays (..., 4)."""
    z = np.asarray(z, dtype=float)
    q0, p0, q1, p1 = np.moveaxis(z, -1, 0)
    x = np.stack([q0 ** 2 - p0 ** 2 + q1 ** 2 - p1 ** 2, 2 * (-q0 * p0 + q1 * p1),
                  2 * (q0 * p1 + p0 * q1)], axis=-1)
    v = np.stack([-2 * (q0 * p0 + q1 * p1), -(q0 ** 2 - p0 ** 2 - q1 ** 2 + p1 ** 2),
                  2 * (q0 * q1 - p0 * p1)], axis=-1)
    return x, v


def _normal(z):
    """``x cross v`` as a quadratic form (valid on the unit sphere)."""
    q0, p0, q1, p1 = np.moveaxis(np.asarray(z, float), -1, 0)
    return np.stack([2 * (q0 * p1 - p0 * q1), -2 * (p0 * p1 + q0 * q1),
                     q1 ** 2 + p1 ** 2 - q0 ** 2 - p0 ** 2], axis=-1)


def _monomials():
    return [(i, j) for i in range(4) for j in range(i, 4)]


def _design():
    """Matrix sending the 10 monomials ``z_i z_j`` to the 9 entries of
    ``[x v x*v]`` and ``|z|^2``."""
    mons = _monomials()
    rows = []
    for i, j in mons:
        e = np.zeros(4)
        f = np.zeros(4)
        e[i] = 1.0
        f[j] = 1.0
        if i == j:
            vals = [np.concatenate([*double_cover(e), _normal(e)]), [1.0]]
        else:
            s = e + f
            d = e - f
            vals_s = np.concatenate([*double_cover(s), _normal(s)])
            vals_d = np.concatenate([*double_cover(d), _normal(d)])
            vals = [(vals_s - vals_d) / 2, [0.0]]
        rows.append(np.concatenate(vals))
    return np.array(rows).T


_DESIGN = _design()
_DESIGN_INV = np.linalg.inv(_DESIGN)


def lift_point(x, v, prev=None):
    """Preimage of ``(x, v)`` under ``D``; the sign is the one nearest ``prev``.

    The ten products ``z_i z_j`` solve a linear system built from the rotation
    matrix ``[x v x*v]`` and ``|z| = 1``; ``z`` is then read off the row of
    ``z z^T`` with the largest diagonal entry.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    rhs = np.concatenate([x, v, np.cross(x, v), [1.0]])
    m = _DESIGN_INV @ rhs
    P = np.zeros((4, 4))
    for val, (i, j) in zip(m, _monomials()):
        P[i, j] = P[j, i] = val
    k = int(np.argmax(np.diag(P)))
    z = P[k] / math.sqrt(max(P[k, k], 1e-300))
    z /= np.linalg.norm(z)
    if prev is not None and np.dot(z, prev) < 0:
        z = -z
    return z


def pullback_defect(z, w):
    """``(D^* lambda0_bar)(w) - 4 lambda0(w)`` at ``z`` for tangent ``w``.

    ``lambda0_bar(zeta) = <v, dx(zeta)>``; ``dx`` is evaluated by polarizing
    the quadratic ``x(z)``.
    """
    z = np.asarray(z, float)
    w = np.asarray(w, float)
    x_zw = 0.5 * (double_cover(z + w)[0] - double_cover(z - w)[0])
    _, v = double_cover(z)
    lhs = np.einsum("...i,...i->...", v, x_zw)
    q0, p0, q1, p1 = np.moveaxis(z, -1, 0)
    a0, b0, a1, b1 = np.moveaxis(w, -1, 0)
    lam = 0.5 * (q0 * b0 - p0 * a0 + q1 * b1 - p1 * a1)
    return lhs - 4 * lam


# --------------------------------------------------------------------------
# loops in the unit tangent bundle and their windings


@dataclass(frozen=True, eq=False)
class UnitTangentLoop:
    """Closed loop ``t -> (x(t), v(t))`` in ``T^1 S^2``; ``sampler(n)``
    returns ``n + 1`` samples including both endpoints."""

    sampler: object
    samples: int = 2048
    name: str = "loop"

    def arrays(self, n=None):
        x, v = self.sampler(self.samples if n is None else n)
        return np.asarray(x, float), np.asarray(v, float)

    def check(self, n=None, tol=1e-10):
        x, v = self.arrays(n)
        defect = max(np.abs(np.linalg.norm(x, axis=1) - 1).max(),
                     np.abs(np.linalg.norm(v, axis=1) - 1).max(),
                     np.abs(np.einsum("ij,ij->i", x, v)).max())
        if defect > tol:
            raise InvalidInput(f"loop leaves the unit tangent bundle by {defect:.2e}")
        closing = max(np.abs(x[-1] - x[0]).max(), np.abs(v[-1] - v[0]).max())
        if closing > 1e-9:
            raise InvalidInput(f"loop is not closed (gap {closing:.2e})")
        return defect


def loop_from_lift(path):
    """Loop ``D o path`` for an ``S^3``-path sampler ``path(t)``, ``t`` in [0, 1]."""
    def sampler(n):
        z = path(np.linspace(0.0, 1.0, n + 1))
        return double_cover(z)
    return sampler


def generator_loop(which, samples=2048):
    """``D o a_i`` with ``a0 = (e^{i pi t}, e^{i pi t}) / sqrt 2`` and
    ``a1 = (e^{i pi t}, e^{-i pi t}) / sqrt 2``."""
    s = 1 if which == 0 else -1

    def path(t):
        return np.stack([np.cos(math.pi * t), np.sin(math.pi * t),
                         np.cos(math.pi * t), s * np.sin(math.pi * t)], axis=-1) / math.sqrt(2)
    return UnitTangentLoop(loop_from_lift(path), samples, f"a{which}")


def concatenate(loop_a, loop_b):
    """Loop running ``loop_a`` on [0, 1/2] and ``loop_b`` on [1/2, 1]; the
    loops must share their base point."""
    def sampler(n):
        m = n // 2
        xa, va = loop_a.arrays(m)
        xb, vb = loop_b.arrays(n - m)
        if max(np.abs(xa[-1] - xb[0]).max(), np.abs(va[-1] - vb[0]).max()) > 1e-9:
            raise InvalidInput("loops do not share a base point")
        return np.concatenate([xa, xb[1:]]), np.concatenate([va, vb[1:]])
    return UnitTangentLoop(sampler, loop_a.samples + loop_b.samples,
                           f"{loop_a.name}*{loop_b.name}")


@dataclass(frozen=True)
class Winds:
    wind0: Fraction
    wind1: Fraction
    raw: tuple
    residual: float

    @property
    def class_pair(self):
        """``(wind0 + wind1, wind0 - wind1)`` in the integer lattice."""
        return int(self.wind0 + self.wind1), int(self.wind0 - self.wind1)


MIN_DISTANCE = 1e-6
JUMP = 0.5


def _lift(x, v):
    z = np.empty((len(x), 4))
    prev = None
    for i in range(len(x)):
        prev = z[i] = lift_point(x[i], v[i], prev)
    return z


def lift_and_wind(loop, max_refine=6):
    """Half-integer windings ``(wind0, wind1)`` of a loop avoiding ``l``.

    The lift is continued by nearest preimage; a chordal jump above 0.5
    doubles the sampling, up to ``max_refine`` times.

    Raises
    ------
    TooClose
        If the lift comes within 1e-6 of ``L0`` or ``L1``.
    LiftDiscontinuity
        If refinement cannot remove a jump.
    ConsistencyFailure
        If ``wind0 + wind1`` is not an integer within 1e-6.
    """
    n = loop.samples
    for _ in range(max_refine + 1):
        x, v = loop.arrays(n)
        z = _lift(x, v)
        if np.linalg.norm(np.diff(z, axis=0), axis=1).max() <= JUMP:
            break
        n *= 2
    else:
        raise LiftDiscontinuity("lift keeps jumping after refinement")
    r0 = np.hypot(z[:, 0], z[:, 1])
    r1 = np.hypot(z[:, 2], z[:, 3])
    if min(r0.min(), r1.min()) <= MIN_DISTANCE:
        raise TooClose("loop passes too close to the Hopf link l")
    w = []
    for a, b in ((z[:, 0], z[:, 1]), (z[:, 2], z[:, 3])):
        ang = np.unwrap(np.arctan2(b, a))
        w.append((ang[-1] - ang[0]) / TWO_PI)
    total = w[0] + w[1]
    if abs(total - round(total)) > 1e-6:
        raise ConsistencyFailure(f"wind0 + wind1 = {total:.8f} is not an integer")
    halves = [Fraction(round(2 * c), 2) for c in w]
    residual = max(abs(c - float(h)) for c, h in zip(w, halves))
    return Winds(halves[0], halves[1], (float(w[0]), float(w[1])), float(residual))


def random_lifted_loop(rng, samples=2048, harmonics=3):
    """Random closed loop in ``T^1 S^2 \\ l`` with known windings.

    Its lift ``(r0 e^{i phi0}, r1 e^{i phi1})`` has ``phi_j(1) - phi_j(0) =
    pi m_j`` with ``m0 = m1 mod 2``, so ``D`` closes it up and the windings
    are ``(m0 / 2, m1 / 2)``.
    """
    m0 = int(rng.integers(-4, 5))
    m1 = m0 + 2 * int(rng.integers(-2, 3))
    c = rng.normal(size=(3, harmonics))
    base = rng.uniform(0, TWO_PI, 2)
    s0 = rng.uniform(0.3, 0.7)
    k = np.arange(1, harmonics + 1)

    def path(t):
        t = np.asarray(t, float)
        bump = np.sin(math.pi * np.outer(t, k))
        phi0 = base[0] + math.pi * m0 * t + bump @ c[0]
        phi1 = base[1] + math.pi * m1 * t + bump @ c[1]
        share = s0 + 0.25 * np.tanh(bump @ c[2])
        r0, r1 = np.sqrt(share), np.sqrt(1 - share)
        return np.stack([r0 * np.cos(phi0), r0 * np.sin(phi0),
                         r1 * np.cos(phi1), r1 * np.sin(phi1)], axis=-1)

    return UnitTangentLoop(loop_from_lift(path), samples, "random"), (Fraction(m0, 2), Fraction(m1, 2))


# --------------------------------------------------------------------------
# satellite windings on the round sphere


def satellite_loop(p, q, eps, samples=None):
    """Normalized velocity loop of ``alpha(t) = exp_{gamma(qt)}(eps sin(2 pi p t) N)``
    on the round sphere, where ``gamma`` is the equator traversed
    counter-clockwise and ``N = e_z``."""
    n = samples or max(4096, 256 * (abs(p) + abs(q)))
    Q = abs(q)
    sgn = 1 if q > 0 else -1

    def sampler(m):
        t = np.linspace(0.0, 1.0, m + 1)
        a = TWO_PI * Q * t * sgn
        s = eps * np.sin(TWO_PI * p * t)
        ds = eps * TWO_PI * p * np.cos(TWO_PI * p * t)
        g = np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)
        dg = sgn * TWO_PI * Q * np.stack([-np.sin(a), np.cos(a), np.zeros_like(a)], axis=-1)
        ez = np.array([0.0, 0.0, 1.0])
        x = np.cos(s)[:, None] * g + np.sin(s)[:, None] * ez
        dx = np.cos(s)[:, None] * dg + ds[:, None] * (-np.sin(s)[:, None] * g + np.cos(s)[:, None] * ez)
        v = dx / np.linalg.norm(dx, axis=1, keepdims=True)
        return x, v

    return UnitTangentLoop(sampler, n, f"satellite({p},{q})")


@dataclass(frozen=True)
class SatelliteWinds:
    p: int
    q: int
    winds: Winds
    expected: tuple
    epsilon: float

    @property
    def matches(self):
        return (self.winds.wind0, self.winds.wind1) == self.expected


def expected_satellite_winds(p, q):
    if q > 0:
        return Fraction(2 * abs(p) - q, 2), Fraction(q, 2)
    return Fraction(q, 2), Fraction(2 * abs(p) - q, 2)


def satellite_wind_check(metric, p, q, eps=1e-2, retries=4):
    """Windings of the ``(p, q)``-satellite velocity loop against
    ``(|p| - q/2, q/2)`` for ``q > 0`` (mirrored for ``q < 0``).

    Only the round sphere is supported: its equator lifts are already the
    Hopf link ``L0 u L1``.
    """
    if metric.kind != "round":
        raise InvalidInput("satellite windings need the round-sphere normalization")
    if q == 0:
        raise InvalidInput("q must be nonzero")
    for _ in range(retries + 1):
        try:
            w = lift_and_wind(satellite_loop(p, q, eps))
            return SatelliteWinds(p, q, w, expected_satellite_winds(p, q), eps)
        except TooClose:
            eps *= 0.5
    raise TooClose("satellite touches the Hopf link for every epsilon tried")
