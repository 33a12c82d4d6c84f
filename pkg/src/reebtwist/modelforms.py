"""Model Reeb flows on star-shaped hypersurfaces built over a profile curve.

A profile ``gamma(t) = (x(t), y(t))`` in squared-radius coordinates
``(|z0|^2, |z1|^2)`` defines ``S_gamma``; pulled back radially to the unit
sphere it gives the contact scaling ``f = x + y`` as a function of
``|z0|^2 = x/(x+y)``.  Every point of the open curve carries an invariant
torus; tori with normal parallel to a relatively prime ``(p, q)`` are
foliated by closed orbits of class ``(p, q)``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConstructionFailure, InvalidInput, NoCone, NoTorus, ProfileInvalid
from .s3flow import ClosedOrbit, ContactScaling, Trajectory
from .twistcone import HomotopyClass, TwistData, argument, enumerate_classes, in_twist_cone

GRID = 10_000


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Planar cubic ``gamma(t) = c0 + c1 t + c2 t^2 + c3 t^3`` on [0, 1]."""

    coeffs: np.ndarray
    theta0: float
    theta1: float
    tangent_scales: tuple = (1.0, 1.0)

    def derivs(self, t, order=0):
        t = np.asarray(t, dtype=float)[..., None]
        c = self.coeffs
        if order == 0:
            out = c[0] + t * (c[1] + t * (c[2] + t * c[3]))
        elif order == 1:
            out = c[1] + t * (2 * c[2] + 3 * t * c[3])
        elif order == 2:
            out = 2 * c[2] + 6 * t * c[3]
        elif order == 3:
            out = 6 * c[3] + 0 * t
        else:
            out = 0 * t + np.zeros(2)
        return out[..., 0], out[..., 1]

    def x(self, t):
        return self.derivs(t)[0]

    def y(self, t):
        return self.derivs(t)[1]

    def reeb_denominator(self, t):
        """``D = x y' - x' y``."""
        x, y = self.derivs(t)
        dx, dy = self.derivs(t, 1)
        return x * dy - dx * y

    def convexity(self, t):
        """``x' y'' - x'' y'``."""
        dx, dy = self.derivs(t, 1)
        ddx, ddy = self.derivs(t, 2)
        return dx * ddy - ddx * dy

    def normal_angle(self, t):
        """Argument of the outward normal ``(y', -x')``."""
        dx, dy = self.derivs(t, 1)
        return np.arctan2(-dx, dy)

    def normal_angle_derivs(self, t):
        """``theta(t)``, ``theta'(t)`` and ``theta''(t)`` of the normal angle."""
        dx, dy = self.derivs(t, 1)
        ddx, ddy = self.derivs(t, 2)
        d3x, d3y = self.derivs(t, 3)
        n = dx * ddy - ddx * dy
        m = dx * dx + dy * dy
        th1 = n / m
        dn = dx * d3y - d3x * dy
        dm = 2 * (dx * ddx + dy * ddy)
        th2 = (dn * m - n * dm) / (m * m)
        return np.arctan2(-dx, dy), th1, th2

    def checks(self, grid=GRID):
        """Evaluate the six profile conditions; returns a dict of booleans."""
        t = np.linspace(0.0, 1.0, grid)
        x, y = self.derivs(t)
        dx0, dy0 = self.derivs(0.0, 1)
        dx1, dy1 = self.derivs(1.0, 1)
        conv = self.convexity(t)
        tol = 1e-12
        res = {
            "start": bool(x[0] > 0 and abs(y[0]) < tol and dy0 > 0),
            "end": bool(abs(x[-1]) < tol and y[-1] > 0 and dx1 < 0),
            "star_shaped": bool(self.reeb_denominator(t).min() > 0),
            "convexity": bool(np.all(conv > 0) or np.all(conv < 0)),
            "normal_start": bool(dy0 > 0 and abs(-dx0 - self.theta1 * dy0) < 1e-12 * abs(dy0)),
            "normal_end": bool(-dx1 > 0 and abs(dy1 - self.theta0 * (-dx1)) < 1e-12 * abs(dx1)),
            "first_quadrant": bool(x[:-1].min() > 0 and y[1:].min() > 0),
        }
        return res

    def is_valid(self, grid=GRID):
        return all(self.checks(grid).values())

    def orientation(self):
        return int(np.sign(self.convexity(0.5)))

    def sample(self, n=1001):
        t = np.linspace(0.0, 1.0, n)
        x, y = self.derivs(t)
        return t, x, y


def _hermite(theta0, theta1, m0, m1):
    P0, P1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    T0 = m0 * np.array([-theta1, 1.0])
    T1 = m1 * np.array([-1.0, theta0])
    c = np.array([P0, T0, -3 * P0 - 2 * T0 + 3 * P1 - T1, 2 * P0 + T0 - 2 * P1 + T1])
    return ProfileCurve(c, float(theta0), float(theta1), (float(m0), float(m1)))


def is_resonant(theta0, theta1):
    """True when ``(theta0, 1)`` is a positive multiple of ``(1, theta1)``."""
    return theta0 > 0 and abs(theta0 * theta1 - 1.0) < 1e-12


def build_profile(theta0, theta1):
    """Cubic Hermite profile from ``(1, 0)`` to ``(0, 1)`` with the
    prescribed endpoint normals.

    Tangent magnitudes are searched on a logarithmic grid; among the
    candidates passing every condition the one with the largest minimal
    curvature-to-radius margin is returned, so the result is deterministic.
    """
    if is_resonant(theta0, theta1):
        raise NoCone(f"resonant data theta0={theta0}, theta1={theta1}: empty twist cone")
    scales = 2.0 ** (np.arange(-12, 13) / 4.0)
    t = np.linspace(0.0, 1.0, GRID)
    best, best_score = None, -np.inf
    for m0 in scales:
        for m1 in scales:
            prof = _hermite(theta0, theta1, m0, m1)
            if not prof.is_valid():
                continue
            dx, dy = prof.derivs(t, 1)
            curv = np.abs(prof.convexity(t)) / (dx * dx + dy * dy) ** 1.5
            score = min(curv.min(), prof.reeb_denominator(t).min())
            if score > best_score:
                best, best_score = prof, score
    if best is None:
        raise ConstructionFailure(
            f"no Hermite profile found for theta0={theta0}, theta1={theta1} "
            f"over tangent scales {scales[0]:.3g}..{scales[-1]:.3g}")
    return best


@dataclass(frozen=True, eq=False)
class ModelForm:
    profile: ProfileCurve
    orientation: int

    @property
    def theta0(self):
        return self.profile.theta0

    @property
    def theta1(self):
        return self.profile.theta1

    @property
    def twist(self):
        return TwistData(self.theta0, self.theta1)


def model_form(theta0, theta1):
    prof = build_profile(theta0, theta1)
    return ModelForm(prof, prof.orientation())


def reeb_field_model(profile, t):
    """Angular rates ``(phi0', phi1') = (2 y'/D, -2 x'/D)``."""
    dx, dy = profile.derivs(t, 1)
    D = profile.reeb_denominator(t)
    return 2 * dy / D, -2 * dx / D


@dataclass(frozen=True)
class InvariantTorus:
    t_star: float
    point: tuple
    normal: tuple
    cls: HomotopyClass
    period: float
    rates: tuple

    def on_sphere(self, phi0=0.0, phi1=0.0):
        x, y = self.point
        s = math.sqrt(x + y)
        return np.array([math.sqrt(x) * math.cos(phi0), math.sqrt(x) * math.sin(phi0),
                         math.sqrt(y) * math.cos(phi1), math.sqrt(y) * math.sin(phi1)]) / s


def locate_torus(form, cls):
    """Unique torus whose normal is parallel to ``(p, q)``, by bracketing
    the normal angle."""
    cls = HomotopyClass(*cls)
    if not in_twist_cone(cls, form.twist):
        raise NoTorus(f"class {tuple(cls)} is outside the twist cone")
    prof = form.profile
    tt = np.linspace(0.0, 1.0, GRID)
    ang = prof.normal_angle(tt)
    dang = np.diff(ang)
    if not (np.all(dang > 0) or np.all(dang < 0)):
        raise ProfileInvalid("normal angle is not strictly monotone")
    target = argument(cls)
    g = lambda t: float(prof.normal_angle(t)) - target
    t_star = brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    x, y = (float(v) for v in prof.derivs(t_star))
    dx, dy = (float(v) for v in prof.derivs(t_star, 1))
    D = x * dy - dx * y
    p, q = cls.p, cls.q
    candidates = []
    if p != 0:
        candidates.append(math.pi * p * D / dy)
    if q != 0:
        candidates.append(math.pi * q * D / (-dx))
    T = candidates[0] if abs(p) >= abs(q) else candidates[-1]
    if len(candidates) == 2 and abs(candidates[0] - candidates[1]) > 1e-9 * abs(T):
        raise ProfileInvalid(f"period mismatch {candidates[0]!r} vs {candidates[1]!r}")
    rates = (2 * dy / D, -2 * dx / D)
    return InvariantTorus(float(t_star), (x, y), (dy, -dx), cls, float(T), rates)


def orbit_on_torus(torus, phi0_init=0.0, phi1_init=0.0, samples=2048):
    """Closed-form orbit on a torus, mapped to the unit sphere."""
    T = torus.period
    t = np.linspace(0.0, T, samples + 1)
    a0, a1 = torus.rates
    ph0 = phi0_init + a0 * t
    ph1 = phi1_init + a1 * t
    x, y = torus.point
    s = math.sqrt(x + y)
    z = np.stack([math.sqrt(x) * np.cos(ph0), math.sqrt(x) * np.sin(ph0),
                  math.sqrt(y) * np.cos(ph1), math.sqrt(y) * np.sin(ph1)], axis=1) / s
    traj = Trajectory(t, z, {"closed_form": True})
    return ClosedOrbit(traj, T, torus.cls, float("nan"), None, True,
                       float(np.linalg.norm(z[-1] - z[0])))


def model_cz_index(form, component, k):
    """``2 floor(k (1 + theta)) + 1`` for an iterate of a Hopf component."""
    if k < 1:
        raise InvalidInput("k must be positive")
    theta = form.theta0 if component in ("L0", 0) else form.theta1
    v = k * (1.0 + theta)
    if abs(v - round(v)) < 1e-10:
        warnings.warn(f"k(1+theta) = {v} is resonant; index is degenerate")
    return 2 * math.floor(v) + 1


# --------------------------------------------------------------------------
# contact scaling on the unit sphere


def _share_table(profile):
    tab = np.linspace(0.0, 1.0, 4097)
    x, y = profile.derivs(tab)
    return (x / (x + y))[::-1], tab[::-1]


def _invert_share(profile, u, iters=3, table=None):
    """Solve ``x(t)/(x(t)+y(t)) = u`` for t (vectorized Newton)."""
    share, tab = table if table is not None else _share_table(profile)
    t = np.interp(u, share, tab)
    for _ in range(iters):
        x, y = profile.derivs(t)
        dx, dy = profile.derivs(t, 1)
        s = x + y
        val = x / s - u
        der = (dx * y - x * dy) / (s * s)
        t = np.clip(t - val / der, 0.0, 1.0)
    return t


def model_scaling(form):
    """Contact scaling ``f(z) = x(t) + y(t)`` with ``x/(x+y) = |z0|^2/|z|^2``."""
    prof = form.profile
    table = _share_table(prof)

    cache = {}

    def parts(Z):
        Z = np.asarray(Z, dtype=float)
        key = (Z.shape, Z.tobytes())
        if key not in cache:
            r2 = np.einsum("...i,...i->...", Z, Z)
            u = (Z[..., 0] ** 2 + Z[..., 1] ** 2) / r2
            cache.clear()
            cache[key] = (r2, u, _invert_share(prof, u, table=table))
        return (Z,) + cache[key]

    def f(Z):
        _, _, _, t = parts(Z)
        x, y = prof.derivs(t)
        out = x + y
        return float(out) if np.ndim(out) == 0 else out

    def grad(Z):
        Z, r2, u, t = parts(Z)
        x, y = prof.derivs(t)
        dx, dy = prof.derivs(t, 1)
        D = x * dy - dx * y
        fu = -(dx + dy) * (x + y) ** 2 / D
        du = -2.0 * np.asarray(u)[..., None] * Z / np.asarray(r2)[..., None]
        du[..., 0] += 2 * Z[..., 0] / r2
        du[..., 1] += 2 * Z[..., 1] / r2
        return np.asarray(fu)[..., None] * du

    return ContactScaling(f, grad, f"model:{form.theta0},{form.theta1}")


def on_model_hypersurface(form, z):
    """Residual of the point ``sqrt(f(z)) z`` against the profile curve."""
    prof = form.profile
    z = np.asarray(z, dtype=float)
    f = model_scaling(form).value(z)
    w = math.sqrt(f) * z
    xr, yr = w[0] ** 2 + w[1] ** 2, w[2] ** 2 + w[3] ** 2
    t = float(_invert_share(prof, xr / (xr + yr)))
    x, y = prof.derivs(t)
    return float(math.hypot(xr - x, yr - y))


@dataclass(frozen=True)
class ActionEntry:
    period: float
    kind: str
    cls: tuple
    multiplicity: int


def action_spectrum(form, max_action):
    """All periods up to ``max_action``: iterates of the Hopf components and
    of the closed orbits on every torus of the model."""
    prof = form.profile
    t = np.linspace(0.0, 1.0, GRID)
    x, y = prof.derivs(t)
    dx, dy = prof.derivs(t, 1)
    support = (x * dy - y * dx) / np.hypot(dx, dy)
    hmin = float(support.min())
    bound = int(math.floor(math.sqrt(2.0) * max_action / (math.pi * hmin))) + 1
    out = []
    for kind, base in (("L0", math.pi * float(prof.y(1.0))), ("L1", math.pi * float(prof.x(0.0)))):
        k = 1
        while k * base <= max_action:
            out.append(ActionEntry(k * base, kind, (), k))
            k += 1
    for cls in enumerate_classes(form.twist, bound):
        T = locate_torus(form, cls).period
        k = 1
        while k * T <= max_action:
            out.append(ActionEntry(k * T, "torus", (cls.p, cls.q), k))
            k += 1
    out.sort(key=lambda e: (e.period, e.kind, e.cls))
    return out
