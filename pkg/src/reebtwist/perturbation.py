"""Morse-Bott perturbation of a model form near one invariant torus.

Near the torus ``{vartheta = vartheta*}`` the model form reads
``lambda_0 = Delta1(vartheta) dx + Delta2(vartheta) dy`` in adapted
coordinates ``(vartheta, x, y)``, where ``vartheta`` is the normal angle of
the profile curve.  The perturbation ``f_eps = 1 + eps beta(vartheta)
cos(2 pi x / L)`` breaks the circle of closed orbits into two survivors, the
rest points of the planar field ``Z`` on the annulus ``I x R/LZ``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (ConsistencyFailure, CoordinateError, EpsilonTooLarge,
                     InvalidInput, NumericalFailure)
from .modelforms import GRID, locate_torus
from .s3flow import Trajectory, linking_numbers
from .sympath import J, constant_loop, cz_index_geometric, evolve_path

IDENTITY_TOL = 1e-6
FD_STEP = 1e-6


# --------------------------------------------------------------------------
# adapted coordinates


@dataclass(frozen=True, eq=False)
class TorusCoordinates:
    """Coordinates ``(vartheta, x, y)`` adapted to one invariant torus.

    ``x = h0'* phi0 + h1'* phi1`` and ``y = h0* phi0 + h1* phi1`` where
    ``h = (r0^2, r1^2) / 2`` along the profile and primes are derivatives in
    ``vartheta``.  ``L`` is the period of ``x`` and ``T`` the period of the
    orbits on the torus.
    """

    form: object
    torus: object
    theta_star: float
    L: float
    T: float
    I: tuple
    h_star: np.ndarray
    dh_star: np.ndarray
    d_star: float
    delta2_pp: float
    _table: tuple = field(repr=False)

    @property
    def half_width(self):
        return 0.5 * (self.I[1] - self.I[0])

    def t_of(self, theta):
        """Profile parameter with normal angle ``theta`` (Newton on a table)."""
        prof = self.form.profile
        ang, ts = self._table
        theta = np.asarray(theta, dtype=float)
        t = np.interp(theta, ang, ts)
        for _ in range(3):
            a, a1, _ = prof.normal_angle_derivs(t)
            t = np.clip(t - (a - theta) / a1, 0.0, 1.0)
        return t

    def h(self, theta):
        """``h``, ``dh/dtheta`` and ``d2h/dtheta2``, each of shape (..., 2)."""
        prof = self.form.profile
        t = self.t_of(theta)
        _, a1, a2 = prof.normal_angle_derivs(t)
        h = 0.5 * np.stack(prof.derivs(t), axis=-1)
        ht = 0.5 * np.stack(prof.derivs(t, 1), axis=-1)
        htt = 0.5 * np.stack(prof.derivs(t, 2), axis=-1)
        a1 = np.asarray(a1)[..., None]
        a2 = np.asarray(a2)[..., None]
        return h, ht / a1, (htt * a1 - ht * a2) / a1 ** 3

    def deltas(self, theta):
        """``(Delta1, Delta1', Delta1'')`` and ``(Delta2, Delta2', Delta2'')``."""
        hs, (d0, d1), d = self.h_star, self.dh_star, self.d_star
        out1, out2 = [], []
        for g in self.h(theta):
            out1.append((g[..., 0] * hs[1] - g[..., 1] * hs[0]) / d)
            out2.append((g[..., 1] * d0 - g[..., 0] * d1) / d)
        return tuple(out1), tuple(out2)

    def Delta(self, theta):
        (a, a1, _), (b, b1, _) = self.deltas(theta)
        return a1 * b - a * b1

    def identity_matrix(self):
        """``[[Delta1', Delta1], [Delta2', Delta2]]`` at ``vartheta*``."""
        (a, a1, _), (b, b1, _) = self.deltas(self.theta_star)
        return np.array([[a1, a], [b1, b]], dtype=float)

    def angles(self, x, y):
        """``(phi0, phi1)`` from ``(x, y)``."""
        M = np.array([[self.dh_star[0], self.dh_star[1]], [self.h_star[0], self.h_star[1]]])
        return np.linalg.solve(M, np.stack([np.asarray(x, float), np.asarray(y, float)]))

    def to_sphere(self, theta, x, y):
        """Radial projection to the unit sphere of the model hypersurface point."""
        theta = np.asarray(theta, dtype=float)
        h = self.h(theta)[0]
        X, Y = 2 * h[..., 0], 2 * h[..., 1]
        phi0, phi1 = self.angles(np.broadcast_to(x, theta.shape), np.broadcast_to(y, theta.shape))
        s = np.sqrt(X + Y)
        return np.stack([np.sqrt(X) * np.cos(phi0), np.sqrt(X) * np.sin(phi0),
                         np.sqrt(Y) * np.cos(phi1), np.sqrt(Y) * np.sin(phi1)], axis=-1) / s[..., None]


def lattice_period(dh_star, search=40):
    """Smallest positive ``|2 pi (a h0' + b h1')|`` over integers ``|a|, |b| <= search``."""
    a = np.arange(-search, search + 1)
    vals = np.abs(2 * math.pi * (a[:, None] * dh_star[0] + a[None, :] * dh_star[1]))
    vals = vals[vals > 1e-9 * (abs(dh_star[0]) + abs(dh_star[1]))]
    return float(vals.min())


def _interval_ok(coords_args, lo, hi, n=801):
    """Delta2 > 0, Delta > 0 and Delta2' changes sign only at vartheta*."""
    c = coords_args
    th = np.linspace(lo, hi, n)
    (a, a1, _), (b, b1, _) = c.deltas(th)
    Delta = a1 * b - a * b1
    if b.min() <= 0 or Delta.min() <= 0:
        return False
    left, right = th < c.theta_star, th > c.theta_star
    s = np.sign(c.delta2_pp)
    return bool(np.all(s * b1[right] > 0) and np.all(s * b1[left] < 0))


def adapted_coordinates(form, torus, half_width=None):
    """Adapted coordinates around ``torus``.

    ``I`` is centred at ``vartheta*``; by default its half width is 0.9 of the
    distance to the nearest end of the normal-angle range, halved until
    ``Delta2 > 0``, ``Delta > 0`` and ``Delta2'`` is of one sign on each side.

    Raises
    ------
    CoordinateError
        If the identity ``[[Delta1', Delta1], [Delta2', Delta2]] = I`` fails
        beyond 1e-6 at ``vartheta*``, or no admissible interval is found.
    """
    prof = form.profile
    ts = np.linspace(0.0, 1.0, GRID + 1)
    ang = prof.normal_angle(ts)
    order = np.argsort(ang)
    table = (ang[order], ts[order])
    theta_star = float(prof.normal_angle(torus.t_star))
    a, a1, a2 = prof.normal_angle_derivs(torus.t_star)
    h_star = 0.5 * np.array(torus.point, dtype=float)
    ht = 0.5 * np.array([float(v) for v in prof.derivs(torus.t_star, 1)])
    htt = 0.5 * np.array([float(v) for v in prof.derivs(torus.t_star, 2)])
    dh = ht / a1
    ddh = (htt * a1 - ht * a2) / a1 ** 3
    d = h_star[1] * dh[0] - h_star[0] * dh[1]
    d2pp = (ddh[1] * dh[0] - ddh[0] * dh[1]) / d
    p, q = torus.cls
    L = 2 * math.pi * (abs(dh[1]) / abs(p) if p else abs(dh[0]) / abs(q))
    reach = min(theta_star - ang.min(), ang.max() - theta_star)
    w = 0.9 * reach if half_width is None else float(half_width)
    if w <= 0 or w > reach:
        raise CoordinateError(f"half width {w!r} leaves the normal-angle range")
    while True:
        coords = TorusCoordinates(form, torus, theta_star, float(L), float(torus.period),
                                  (theta_star - w, theta_star + w), h_star, dh, float(d),
                                  float(d2pp), table)
        if _interval_ok(coords, *coords.I):
            break
        if half_width is not None or w < 1e-6:
            raise CoordinateError("no admissible interval around the torus")
        w *= 0.5
    defect = np.abs(coords.identity_matrix() - np.eye(2)).max()
    if defect > IDENTITY_TOL:
        raise CoordinateError(f"identity check off by {defect:.2e}")
    return coords


# --------------------------------------------------------------------------
# perturbed form


@dataclass(frozen=True)
class SmoothBump:
    """C^2 bump on ``I``: one on the middle third, quintic smoothstep on the
    outer thirds, zero outside."""

    center: float
    half_width: float

    def __call__(self, theta, order=0):
        theta = np.asarray(theta, dtype=float)
        w = self.half_width
        r = theta - self.center
        u = np.clip((w - np.abs(r)) / (w / 3), 0.0, 1.0)
        if order == 0:
            return u ** 3 * (10 - 15 * u + 6 * u * u)
        ds = 30 * u * u * (1 - u) ** 2
        if order == 1:
            return ds * (-np.sign(r) * 3 / w)
        d2s = 60 * u * (1 - u) * (1 - 2 * u)
        return d2s * (3 / w) ** 2


@dataclass(frozen=True)
class PerturbedForm:
    epsilon: float
    coords: TorusCoordinates
    beta: SmoothBump

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidInput("epsilon must lie in (0, 1) so that f_eps > 0")

    @property
    def k(self):
        return 2 * math.pi / self.coords.L

    @property
    def smallness_threshold(self):
        """Empirical bound ``1e-2 min(1, |Delta2''|, dist(vartheta*, dI)^2)``."""
        c = self.coords
        return 1e-2 * min(1.0, abs(c.delta2_pp), c.half_width ** 2)

    @property
    def within_threshold(self):
        return self.epsilon <= self.smallness_threshold

    def f(self, theta, x):
        return 1 + self.epsilon * self.beta(theta) * np.cos(self.k * np.asarray(x, float))


def perturbed_form(form, cls, epsilon, half_width=None):
    torus = locate_torus(form, cls)
    coords = adapted_coordinates(form, torus, half_width)
    return PerturbedForm(float(epsilon), coords, SmoothBump(coords.theta_star, coords.half_width))


def _form_partials(pf, theta, x):
    """``f``, ``Delta1``, ``Delta2`` with first partials in ``(vartheta, x)``."""
    theta = np.asarray(theta, float)
    x = np.asarray(x, float)
    (a, a1, _), (b, b1, _) = pf.coords.deltas(theta)
    eps, k = pf.epsilon, pf.k
    be, be1 = pf.beta(theta), pf.beta(theta, 1)
    cs, sn = np.cos(k * x), np.sin(k * x)
    f = 1 + eps * be * cs
    f_t = eps * be1 * cs
    f_x = -eps * k * be * sn
    return f, f_t, f_x, (a, a1), (b, b1)


def reeb_field(pf, theta, x):
    """Reeb field ``(X^vartheta, X^x, X^y)`` of ``f_eps (Delta1 dx + Delta2 dy)``.

    The 1-form has coefficient vector ``A = (0, f Delta1, f Delta2)``; the
    Reeb field is ``curl A / (A . curl A)``.
    """
    f, f_t, f_x, (a, a1), (b, b1) = _form_partials(pf, theta, x)
    A = np.stack([np.zeros_like(f), f * a, f * b], axis=-1)
    curl = np.stack([f_x * b, -(f_t * b + f * b1), f_t * a + f * a1], axis=-1)
    return curl / np.einsum("...i,...i->...", A, curl)[..., None]


# --------------------------------------------------------------------------
# reduced planar field


@dataclass(frozen=True)
class AnnulusField:
    form: PerturbedForm

    def __call__(self, theta, x):
        pf = self.form
        theta = np.asarray(theta, float)
        x = np.asarray(x, float)
        _, (b, b1, _) = pf.coords.deltas(theta)
        eps, k = pf.epsilon, pf.k
        be, be1 = pf.beta(theta), pf.beta(theta, 1)
        cs, sn = np.cos(k * x), np.sin(k * x)
        zt = -eps * k * be * b * sn
        zx = -eps * be1 * b * cs - (1 + eps * be * cs) * b1
        return np.stack([zt, zx], axis=-1)

    def jacobian(self, theta, x, h=FD_STEP):
        """Central-difference Jacobian ``d(Z^vartheta, Z^x) / d(vartheta, x)``."""
        cols = [(self(theta + h, x) - self(theta - h, x)) / (2 * h),
                (self(theta, x + h) - self(theta, x - h)) / (2 * h)]
        return np.stack(cols, axis=-1)


def reduced_field(pf):
    return AnnulusField(pf)


def projection_defect(pf, n=100):
    """Max of ``|Z - f^2 Delta (X^vartheta, X^x)|`` on an ``n x n`` grid of
    ``I x [0, L)``, relative to ``max |Z|``."""
    c = pf.coords
    th = np.linspace(c.I[0], c.I[1], n + 2)[1:-1]
    xs = np.linspace(0.0, c.L, n, endpoint=False)
    TH, XS = np.meshgrid(th, xs, indexing="ij")
    Z = reduced_field(pf)(TH, XS)
    X = reeb_field(pf, TH, XS)
    scale = (pf.f(TH, XS) ** 2 * c.Delta(TH))[..., None]
    return float(np.abs(Z - scale * X[..., :2]).max() / np.abs(Z).max())


# --------------------------------------------------------------------------
# rest points


@dataclass(frozen=True)
class RestPoint:
    name: str
    point: tuple
    eigenvalues: tuple
    kind: str
    predicted_modulus: float


def _newton(F, Jf, u, tol=1e-13, max_iter=50):
    for _ in range(max_iter):
        r = F(u)
        if np.abs(r).max() < tol:
            return u
        step = np.linalg.solve(Jf(u), -r)
        lam = 1.0
        while lam > 1e-4 and np.abs(F(u + lam * step)).max() >= np.abs(r).max():
            lam *= 0.5
        u = u + lam * step
    if np.abs(F(u)).max() < 1e3 * tol:
        return u
    raise NumericalFailure("Newton iteration did not converge")


def _count_line_zeros(field, pf, x, n=4000):
    c = pf.coords
    th = np.linspace(c.I[0], c.I[1], n)
    zx = field(th, np.full_like(th, x))[:, 1]
    s = np.sign(zx)
    return int(np.count_nonzero(s[1:] * s[:-1] <= 0))


def predicted_modulus(pf, which):
    """Closed-form ``sqrt(eps (1 +- eps)) (2 pi / L) sqrt(|Delta2''|)``."""
    sgn = 1 if which == "max" else -1
    eps = pf.epsilon
    return math.sqrt(eps * (1 + sgn * eps)) * pf.k * math.sqrt(abs(pf.coords.delta2_pp))


def rest_points_and_linearization(field, pf):
    """The two rest points of ``Z`` with Jacobian eigenvalues and type.

    Zeros of ``Z^vartheta`` in the open interval lie on ``x = 0`` and
    ``x = L/2``; a sign scan of ``Z^x`` on both lines verifies that each
    contributes exactly one zero.

    Raises
    ------
    EpsilonTooLarge
        If the scan finds additional rest points.
    """
    c = pf.coords
    extra = [_count_line_zeros(field, pf, x) for x in (0.0, 0.5 * c.L)]
    if extra != [1, 1]:
        raise EpsilonTooLarge(f"zero counts on the rest lines are {extra}, expected [1, 1]")
    out = []
    for name, x0 in (("max", 0.0), ("min", 0.5 * c.L)):
        F = lambda u: field(u[0], u[1])
        Jf = lambda u: field.jacobian(u[0], u[1])
        u = _newton(F, Jf, np.array([c.theta_star, x0]))
        ev = np.linalg.eigvals(field.jacobian(u[0], u[1]))
        real = np.abs(ev.imag).max() <= 1e-8 * np.abs(ev).max()
        kind = "hyperbolic" if real else "elliptic"
        ev = tuple(sorted((complex(e) for e in ev), key=lambda e: (e.real, e.imag)))
        if real:
            ev = tuple(complex(e.real, 0.0) for e in ev)
        out.append(RestPoint(name, (float(u[0]), float(u[1])), ev, kind, predicted_modulus(pf, name)))
    return out


# --------------------------------------------------------------------------
# surviving orbits


@dataclass(frozen=True)
class SurvivingIndices:
    mu_max: int
    mu_min: int
    c_max: float
    c_min: float
    period_max: float
    period_min: float


def linearized_matrix(pf, which):
    """``[[0, -+c], [-Delta2'', 0]]`` with ``c = eps (2 pi / L)^2 / (1 +- eps)``,
    the off-diagonal entry of the linearized flow in the frame
    ``{d/dvartheta, d/dx / f}``."""
    sgn = 1 if which == "max" else -1
    c = pf.epsilon * pf.k ** 2 / (1 + sgn * pf.epsilon)
    return np.array([[0.0, -sgn * c], [-pf.coords.delta2_pp, 0.0]]), c


def surviving_orbit_indices(pf):
    """Conley-Zehnder indices of the two surviving orbits.

    Raises
    ------
    ConsistencyFailure
        If ``mu_max - mu_min != 1``.
    """
    res = {}
    for which, sgn in (("max", 1), ("min", -1)):
        A, c = linearized_matrix(pf, which)
        period = pf.coords.T * (1 + sgn * pf.epsilon)
        S = -J @ A * period
        path = evolve_path(constant_loop(S, name=f"P_{which}"))
        res[which] = (cz_index_geometric(path), c, period)
    out = SurvivingIndices(res["max"][0], res["min"][0], res["max"][1], res["min"][1],
                           res["max"][2], res["min"][2])
    if out.mu_max - out.mu_min != 1:
        raise ConsistencyFailure(f"index difference {out.mu_max - out.mu_min} != 1")
    return out


def _return_event(T):
    def ev(s, u):
        return u[2] - T
    ev.terminal = True
    ev.direction = 1
    return ev


def return_map(pf, theta, x, rtol=1e-11):
    """First return of the perturbed Reeb flow to ``y = 0 mod T``.

    ``(0, T)`` is a lattice vector of the ``(x, y)`` torus, so points with
    ``y = T`` and ``y = 0`` coincide.  Returns ``(theta', x', time)``.
    """
    T = pf.coords.T
    rhs = lambda s, u: reeb_field(pf, u[0], u[1])
    sol = solve_ivp(rhs, (0.0, 3 * T), [theta, x, 0.0], method="DOP853", rtol=rtol,
                    atol=1e-13, events=_return_event(T))
    if sol.status != 1:
        raise NumericalFailure("trajectory did not return to the section")
    u = sol.y_events[0][0]
    return float(u[0]), float(u[1]), float(sol.t_events[0][0])


@dataclass(frozen=True)
class PerturbedOrbit:
    point: tuple
    period: float
    links: tuple


def closed_orbits(pf, n_theta=3, n_x=6, max_action=None):
    """Fixed points of the return map found by Newton from a seed grid on
    ``I x [0, L)``; distinct solutions with period below ``max_action``
    (default ``T + 1``)."""
    c = pf.coords
    max_action = c.T + 1 if max_action is None else max_action
    L = c.L

    def G(u):
        t1, x1, _ = return_map(pf, u[0], u[1])
        dx = (x1 - u[1] + 0.5 * L) % L - 0.5 * L
        return np.array([t1 - u[0], dx])

    def JG(u, h=1e-6):
        return np.stack([(G(u + h * e) - G(u - h * e)) / (2 * h) for e in np.eye(2)], axis=-1)

    w = c.half_width
    found = []
    for th in c.theta_star + np.linspace(-w / 6, w / 6, n_theta):
        for x0 in np.arange(n_x) * L / n_x + 0.5 * L / n_x:
            try:
                u = _newton(G, JG, np.array([th, x0]), tol=1e-10, max_iter=30)
            except (NumericalFailure, np.linalg.LinAlgError):
                continue
            if not c.I[0] < u[0] < c.I[1]:
                continue
            u[1] %= L
            if L - u[1] < 1e-9:
                u[1] -= L
            if any(abs(u[0] - v[0]) < 1e-6 and abs((u[1] - v[1] + L / 2) % L - L / 2) < 1e-6
                   for v in found):
                continue
            found.append(u)
    out = []
    for u in sorted(found, key=lambda v: v[1]):
        _, _, period = return_map(pf, u[0], u[1])
        if period <= max_action:
            out.append(PerturbedOrbit((float(u[0]), float(u[1])), period, orbit_links(pf, u)))
    return out


def orbit_links(pf, point, samples=4096):
    """Linking numbers with ``L0`` and ``L1`` of the closed orbit through ``point``."""
    c = pf.coords
    T = c.T
    rhs = lambda s, u: reeb_field(pf, u[0], u[1])
    sol = solve_ivp(rhs, (0.0, 3 * T), [point[0], point[1], 0.0], method="DOP853",
                    rtol=1e-11, atol=1e-13, events=_return_event(T), dense_output=True)
    s_end = sol.t_events[0][0]
    s = np.linspace(0.0, s_end, samples)
    u = sol.sol(s)
    z = c.to_sphere(u[0], u[1], u[2])
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return linking_numbers(Trajectory(s, z))


# --------------------------------------------------------------------------
# gradient cylinders


@dataclass(frozen=True)
class Heteroclinic:
    start: float
    s: np.ndarray
    x: np.ndarray
    a: np.ndarray
    limit_plus: float
    limit_minus: float
    residual_plus: float
    residual_minus: float
    monotone: bool
    drift_plus: float
    drift_minus: float


def gradient_rhs(pf, x):
    """``(-T / f_eps)'(x)`` on the torus, where ``beta = 1``."""
    eps, k, T = pf.epsilon, pf.k, pf.coords.T
    f = 1 + eps * np.cos(k * x)
    return -T * eps * k * np.sin(k * x) / f ** 2


def _flow_to_limit(pf, x0, direction, limit, tol):
    T, eps, k = pf.coords.T, pf.epsilon, pf.k
    rate = T * eps * k * k / (1 + eps) ** 2
    s_max = 50 * (math.log(pf.coords.L / tol) + 1) / rate

    def rhs(s, u):
        return [direction * gradient_rhs(pf, u[0]), T * (1 + eps * math.cos(k * u[0]))]

    def near(s, u):
        return abs(u[0] - limit) - 0.5 * tol
    near.terminal = True
    sol = solve_ivp(rhs, (0.0, s_max), [x0, 0.0], method="DOP853", rtol=1e-12,
                    atol=1e-15, events=near)
    if sol.status != 1:
        raise NumericalFailure("gradient line did not reach its limit")
    return direction * sol.t, sol.y[0], direction * sol.y[1]


def gradient_cylinders(pf, tol=1e-8):
    """The two heteroclinics of ``x' = (-T/f_eps)'(x)`` from ``L/4`` and ``3L/4``,
    with ``a(s) = T int_0^s f_eps(x(r)) dr``.

    Raises
    ------
    ConsistencyFailure
        If the right-hand side vanishes anywhere but ``0`` and ``L/2``.
    """
    L, T, eps = pf.coords.L, pf.coords.T, pf.epsilon
    xs = np.linspace(0.0, L, 20001)
    g = gradient_rhs(pf, xs)
    interior = np.concatenate([xs[1:10000], xs[10001:-1]])
    if np.any(gradient_rhs(pf, interior) == 0) or np.any(np.sign(g[1:10000]) != -1) \
            or np.any(np.sign(g[10001:-1]) != 1):
        raise ConsistencyFailure("gradient field has zeros besides 0 and L/2")
    out = []
    for x0, lim_plus in ((0.25 * L, 0.0), (0.75 * L, L)):
        s_f, x_f, a_f = _flow_to_limit(pf, x0, 1, lim_plus, tol)
        s_b, x_b, a_b = _flow_to_limit(pf, x0, -1, 0.5 * L, tol)
        s = np.concatenate([s_b[::-1], s_f[1:]])
        x = np.concatenate([x_b[::-1], x_f[1:]])
        a = np.concatenate([a_b[::-1], a_f[1:]])
        dx = np.diff(x)
        mono = bool(np.all(dx < 0) or np.all(dx > 0))
        tail = max(1, len(s_f) // 4)
        d_plus = a_f - T * (1 + eps) * s_f
        d_minus = a_b - T * (1 - eps) * s_b
        out.append(Heteroclinic(
            float(x0), s, x, a, lim_plus, 0.5 * L,
            float(abs(x_f[-1] - lim_plus)), float(abs(x_b[-1] - 0.5 * L)), mono,
            float(np.ptp(d_plus[-tail:])), float(np.ptp(d_minus[-max(1, len(s_b) // 4):]))))
    return out
