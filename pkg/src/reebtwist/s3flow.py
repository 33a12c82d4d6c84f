"""Reeb flows of ``f lambda0`` on the unit 3-sphere.

Points are ``z = (q0, p0, q1, p1)`` with complex coordinates
``z0 = q0 + i p0`` and ``z1 = q1 + i p1``.  The standard form is
``lambda0 = 1/2 sum(q dp - p dq)``; its Reeb field is ``2 i z`` with period pi.
The Hopf link components are ``L0 = {z0 = 0}`` and ``L1 = {z1 = 0}``.
The contact planes carry the global frame ``e1 = (-conj z1, conj z0)``,
``e2 = i e1``, orthonormal with ``dlambda0(e1, e2) = 1``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853, quad, solve_ivp

from . import sympath
from .errors import (DegeneratePath, FrameError, IntegrationFailure,
                     InvalidInput, NumericalFailure, ReseedRequired, TooClose)
from .twistcone import HomotopyClass

I4 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
E1 = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], float)
E2 = I4 @ E1

FD_STEP = 1e-5


@dataclass(frozen=True)
class ContactScaling:
    """Positive function ``f`` on S^3 defining the form ``f lambda0``.

    ``f`` and ``grad`` accept a point of shape (4,) or a batch (n, 4).
    """

    f: Callable
    grad: Callable
    provenance: str = "user"

    def value(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            return float(self.f(Z))
        out = np.asarray(self.f(Z), dtype=float)
        if out.shape != (Z.shape[0],):
            out = np.array([float(self.f(z)) for z in Z])
        return out

    def gradient(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            return np.asarray(self.grad(Z), dtype=float)
        out = np.asarray(self.grad(Z), dtype=float)
        if out.shape != Z.shape:
            out = np.array([self.grad(z) for z in Z], dtype=float)
        return out

    def validate(self, samples=2000, seed=0):
        Z = random_sphere_points(np.random.default_rng(seed), samples)
        v = self.value(Z)
        if not np.all(np.isfinite(v)) or v.min() <= 0:
            raise InvalidInput("contact scaling must be positive on S^3")
        return self


def unit_scaling():
    return ContactScaling(lambda Z: np.ones(np.shape(Z)[:-1]) if np.ndim(Z) > 1 else 1.0,
                          lambda Z: np.zeros(np.shape(Z)), "unit")


def constant_scaling(c):
    if c <= 0:
        raise InvalidInput("scaling constant must be positive")
    return ContactScaling(lambda Z: c * np.ones(np.shape(Z)[:-1]) if np.ndim(Z) > 1 else float(c),
                          lambda Z: np.zeros(np.shape(Z)), f"constant:{c}")


def scaled(scaling, c):
    """Scaling of the form ``c f lambda0``."""
    return ContactScaling(lambda Z: c * scaling.value(Z), lambda Z: c * scaling.gradient(Z),
                          f"{scaling.provenance}*{c}")


def linear_scaling(a, b=1.0):
    """``b + a . z``; adapted to the Hopf link only when ``a = 0``."""
    a = np.asarray(a, dtype=float)
    return ContactScaling(lambda Z: b + np.asarray(Z) @ a,
                          lambda Z: np.broadcast_to(a, np.shape(Z)).copy(), "linear")


def hyperbolic_test_scaling(c=1.0):
    """``1 + c Re(z0^2 conj(z1)^2)``: adapted, with positive hyperbolic
    Hopf components for ``0 < c < 4``."""

    def parts(Z):
        Z = np.asarray(Z, dtype=float)
        z0 = Z[..., 0] + 1j * Z[..., 1]
        z1 = Z[..., 2] + 1j * Z[..., 3]
        return z0, z1

    def f(Z):
        z0, z1 = parts(Z)
        return 1.0 + c * np.real(z0 ** 2 * np.conj(z1) ** 2)

    def grad(Z):
        z0, z1 = parts(Z)
        w0 = 2 * z0 * np.conj(z1) ** 2
        w1 = 2 * np.conj(z1) * z0 ** 2
        g = np.stack([np.real(w0), -np.imag(w0), np.real(w1), np.imag(w1)], axis=-1)
        return c * g

    return ContactScaling(f, grad, f"hyperbolic-test:{c}")


def random_sphere_points(rng, n):
    Z = rng.normal(size=(n, 4))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def frame(Z):
    Z = np.asarray(Z, dtype=float)
    return Z @ E1.T, Z @ E2.T


def lambda0(Z, V):
    """``lambda0_z(v)`` for matching batches."""
    Z, V = np.asarray(Z), np.asarray(V)
    return 0.5 * (Z[..., 0] * V[..., 1] - Z[..., 1] * V[..., 0]
                  + Z[..., 2] * V[..., 3] - Z[..., 3] * V[..., 2])


def reeb_vector(scaling, Z):
    """Reeb field of ``f lambda0``:
    ``X = X0/f + (df(e2) e1 - df(e1) e2)/f^2`` with ``X0 = 2 i z``."""
    Z = np.asarray(Z, dtype=float)
    single = Z.ndim == 1
    Zb = np.atleast_2d(Z)
    F = np.atleast_1d(scaling.value(Zb) if not single else scaling.value(Z))
    G = np.atleast_2d(scaling.gradient(Zb) if not single else scaling.gradient(Z))
    e1, e2 = frame(Zb)
    d1 = np.einsum("ni,ni->n", G, e1)
    d2 = np.einsum("ni,ni->n", G, e2)
    X = (2.0 * Zb @ I4.T) / F[:, None] + (d2[:, None] * e1 - d1[:, None] * e2) / (F * F)[:, None]
    return X[0] if single else X


def reeb_jacobian(scaling, z, h=FD_STEP):
    z = np.asarray(z, dtype=float)
    pts = np.concatenate([z + h * np.eye(4), z - h * np.eye(4)])
    X = reeb_vector(scaling, pts)
    return ((X[:4] - X[4:]) / (2 * h)).T


def check_adapted(scaling, samples=1000, tol=1e-8):
    """True iff ``df`` annihilates the contact planes along both Hopf link
    components."""
    s = np.linspace(0.0, 2 * math.pi, samples // 2, endpoint=False)
    c, si, zero = np.cos(s), np.sin(s), np.zeros_like(s)
    Z = np.concatenate([np.stack([zero, zero, c, si], axis=1),
                        np.stack([c, si, zero, zero], axis=1)])
    G = scaling.gradient(Z)
    e1, e2 = frame(Z)
    worst = max(np.abs(np.einsum("ni,ni->n", G, e1)).max(),
                np.abs(np.einsum("ni,ni->n", G, e2)).max())
    return bool(worst <= tol)


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    z: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.abs(np.linalg.norm(self.z, axis=1) - 1.0).max()
        if r > 1e-10:
            raise NumericalFailure(f"trajectory left the sphere by {r:.2e}")

    def reversed(self):
        return Trajectory(self.t[-1] - self.t[::-1], self.z[::-1].copy(), dict(self.meta))


def _project(z):
    return z / np.linalg.norm(z)


def _step_integrate(rhs, y0, T, rtol, atol, max_step, project):
    solver = DOP853(rhs, 0.0, np.array(y0, dtype=float), T, rtol=rtol, atol=atol,
                    max_step=max_step)
    ts, ys = [0.0], [solver.y.copy()]
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationFailure(f"Reeb integration failed: {msg}")
        solver.y = project(solver.y)
        ts.append(solver.t)
        ys.append(solver.y.copy())
    return np.array(ts), np.array(ys)


def integrate_reeb(scaling, z0, t_span, tol=1e-11, max_step=0.05):
    """Adaptive eighth-order integration of the Reeb flow on [0, t_span],
    re-projecting onto the sphere after every step."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    z0 = np.asarray(z0, dtype=float)
    if abs(np.linalg.norm(z0) - 1.0) > 1e-9:
        raise InvalidInput("initial point must lie on the unit sphere")
    ts, zs = _step_integrate(lambda t, z: reeb_vector(scaling, z), _project(z0),
                             float(t_span), tol, tol * 1e-2, max_step, _project)
    return Trajectory(ts, zs, {"tol": tol, "steps": len(ts) - 1,
                               "form": scaling.provenance})


def dense_orbit(scaling, z0, T, samples, tol=1e-11):
    """Orbit sampled at ``samples + 1`` uniform times of [0, T]."""
    t = np.linspace(0.0, T, samples + 1)
    sol = solve_ivp(lambda s, z: reeb_vector(scaling, z), (0.0, T), _project(np.asarray(z0, float)),
                    method="DOP853", t_eval=t, rtol=tol, atol=tol * 1e-2, max_step=0.05)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    z = sol.y.T / np.linalg.norm(sol.y.T, axis=1, keepdims=True)
    return Trajectory(t, z, {"tol": tol, "form": scaling.provenance})


def reeb_normalization_defect(scaling, traj):
    """Largest ``|lambda(z') - 1|`` along a trajectory."""
    X = reeb_vector(scaling, traj.z)
    return float(np.abs(scaling.value(traj.z) * lambda0(traj.z, X) - 1.0).max())


# --------------------------------------------------------------------------
# windings and linking


def polar_winding(traj, component, min_radius=1e-6):
    """Unwrapped winding (turns) of ``arg z0`` (component 0) or ``arg z1``."""
    z = traj.z
    a, b = (z[:, 0], z[:, 1]) if component == 0 else (z[:, 2], z[:, 3])
    r = np.hypot(a, b)
    if r.min() <= min_radius:
        raise TooClose(f"curve passes within {r.min():.2e} of L{component}")
    ang = np.arctan2(b, a)
    step = np.diff(ang)
    step = step - 2 * math.pi * np.round(step / (2 * math.pi))
    if step.size and np.abs(step).max() > math.pi / 2:
        raise NumericalFailure("curve sampled too coarsely for winding")
    return float(step.sum() / (2 * math.pi))


def linking_number(traj, component):
    w = polar_winding(traj, component)
    n = int(round(w))
    if abs(w - n) > 1e-3:
        raise NumericalFailure(f"curve is not closed (winding {w:.6f})")
    return n


def linking_numbers(orbit):
    """(link with L0, link with L1) of a closed orbit avoiding both."""
    traj = orbit.base if isinstance(orbit, ClosedOrbit) else orbit
    return linking_number(traj, 0), linking_number(traj, 1)


# --------------------------------------------------------------------------
# transverse linearization


def _variational_rhs(scaling, m):
    def rhs(t, y):
        z = y[:4]
        P = y[4:].reshape(4, m)
        out = np.empty_like(y)
        out[:4] = reeb_vector(scaling, z)
        out[4:] = (reeb_jacobian(scaling, z) @ P).ravel()
        return out
    return rhs


def transverse_path(scaling, z0, T, samples=512, tol=1e-11):
    """Linearized flow on the contact planes along the orbit through ``z0``
    of period ``T``, in the frame ``e1/sqrt(f), e2/sqrt(f)``, sampled at
    ``samples + 1`` uniform times and rescaled to [0, 1]."""
    z0 = _project(np.asarray(z0, dtype=float))
    f0 = scaling.value(z0)
    e1, e2 = frame(z0)
    P0 = np.stack([e1, e2], axis=1) / math.sqrt(f0)
    y0 = np.concatenate([z0, P0.ravel()])
    t = np.linspace(0.0, T, samples + 1)
    sol = solve_ivp(_variational_rhs(scaling, 2), (0.0, T), y0, method="DOP853",
                    t_eval=t, rtol=tol, atol=tol * 1e-2, max_step=0.05)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    Y = sol.y.T
    Z = Y[:, :4]
    P = Y[:, 4:].reshape(-1, 4, 2)
    F = scaling.value(Z)
    f1, f2 = frame(Z)
    basis = np.stack([f1, f2], axis=1)
    if np.abs(np.linalg.det(basis @ np.swapaxes(basis, 1, 2)) - 1.0).max() > 1e-8:
        raise FrameError("global frame degenerated along the orbit")
    values = np.sqrt(F)[:, None, None] * (basis @ P)
    det_defect = float(np.abs(np.linalg.det(values) - 1.0).max())
    path = sympath.SymplecticPath.from_samples(t / T, values)
    return path, det_defect


def transverse_generator(scaling, z0, T, samples=256, tol=1e-11):
    """Symmetric generator of the transverse linearized flow along a closed
    orbit, rescaled to unit period."""
    traj = dense_orbit(scaling, z0, T, samples, tol)
    Z = traj.z[:-1]
    X = reeb_vector(scaling, Z)
    F = scaling.value(Z)
    G = scaling.gradient(Z)
    fdot = np.einsum("ni,ni->n", G, X)
    e = [Z @ E1.T, Z @ E2.T]
    DX = np.array([reeb_jacobian(scaling, z) for z in Z])
    A = np.empty((len(Z), 2, 2))
    for i, Ei in enumerate((E1, E2)):
        EiX = X @ Ei.T
        for j in range(2):
            DXe = np.einsum("nab,nb->na", DX, e[j])
            A[:, i, j] = (np.einsum("na,na->n", DXe, e[i])
                          + np.einsum("na,na->n", e[j], EiX))
        A[:, i, i] += fdot / (2 * F)
    S = -sympath.J @ A * T
    asym = np.abs(S - np.swapaxes(S, 1, 2)).max()
    if asym > 1e-5 * max(1.0, np.abs(S).max()):
        raise NumericalFailure(f"transverse generator not symmetric ({asym:.2e})")
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    tau = np.arange(samples) / samples
    return sympath.sampled_loop(tau, S[:, 0, 0], S[:, 0, 1], S[:, 1, 1], name="transverse")


@dataclass(frozen=True, eq=False)
class ClosedOrbit:
    base: Trajectory
    period: float
    cls: Optional[HomotopyClass]
    rho: float
    cz: Optional[int]
    degenerate: bool = False
    gap: float = 0.0
    path: Optional[sympath.SymplecticPath] = None

    @property
    def start(self):
        return self.base.z[0]

    def cz_iterate(self, k):
        if self.path is None:
            raise InvalidInput("orbit carries no transverse path")
        return sympath.iterate_cz_index(self.path, k)


def make_closed_orbit(scaling, z0, T, tol=1e-11, samples=512, k_max=2 ** 20,
                      linearize=True):
    """Integrate one period from ``z0`` and attach class, rotation number
    and index.  Orbits on the Hopf link carry ``cls = None``."""
    traj = integrate_reeb(scaling, z0, T, tol)
    gap = float(np.linalg.norm(traj.z[-1] - traj.z[0]))
    if gap > 1e-6:
        raise NumericalFailure(f"orbit does not close: gap {gap:.2e}")
    try:
        cls = HomotopyClass(*linking_numbers(traj))
    except TooClose:
        cls = None
    rho, cz, degenerate, path = float("nan"), None, False, None
    if linearize:
        path, _ = transverse_path(scaling, z0, T, samples, tol)
        rho = sympath.path_rotation_number(path, k_max).value
        try:
            cz = sympath.cz_index_geometric(path)
        except DegeneratePath:
            degenerate = True
    return ClosedOrbit(traj, float(T), cls, rho, cz, degenerate, gap, path)


def component_start(component):
    if component in ("L0", 0):
        return np.array([0.0, 0.0, 1.0, 0.0])
    if component in ("L1", 1):
        return np.array([1.0, 0.0, 0.0, 0.0])
    raise InvalidInput(f"unknown component {component!r}")


def component_period(scaling, component):
    """Period of a Hopf link component, which is a closed orbit for adapted
    forms: along it ``X = 2 i z / f``."""
    if not check_adapted(scaling):
        raise InvalidInput("Hopf link is not an orbit set of this form")
    if component in ("L0", 0):
        pt = lambda s: np.array([0.0, 0.0, math.cos(s), math.sin(s)])
    else:
        pt = lambda s: np.array([math.cos(s), math.sin(s), 0.0, 0.0])
    val, _ = quad(lambda s: 0.5 * scaling.value(pt(s)), 0.0, 2 * math.pi,
                  epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def component_orbit(scaling, component, **kw):
    return make_closed_orbit(scaling, component_start(component),
                             component_period(scaling, component), **kw)


def transverse_rotation_number(scaling, orbit, k_max=2 ** 20, samples=512, tol=1e-11):
    path = orbit.path
    if path is None:
        path, _ = transverse_path(scaling, orbit.start, orbit.period, samples, tol)
    return sympath.path_rotation_number(path, k_max)


@dataclass(frozen=True)
class WindingBounds:
    wind_lt0: int
    wind_geq0: int
    theta: float
    orbit_type: str
    bounds_verified: bool


def asymptotic_winding_bounds(scaling, component, k, samples=256):
    """Extremal asymptotic windings of the k-th iterate of a Hopf component,
    shifted to the frame that extends over a spanning disk (global winding
    minus k)."""
    if k < 1:
        raise InvalidInput("k must be positive")
    orbit = component_orbit(scaling, component)
    M = orbit.path.end
    sympath._check_roots_of_unity(M, k)
    kind = sympath.classify_matrix(M)
    gen = transverse_generator(scaling, orbit.start, orbit.period, samples)
    spec = sympath.asymptotic_spectrum(sympath.iterated_loop(gen, k), window=1)
    lt0, geq0 = spec.wind_minus - k, spec.wind_plus - k
    theta = orbit.rho - 1.0
    x = k * theta
    if kind == "elliptic":
        ok = lt0 < x < geq0
    else:
        ok = lt0 == geq0 and abs(x - lt0) < 1e-6
    return WindingBounds(lt0, geq0, theta, kind, bool(ok))


# --------------------------------------------------------------------------
# shooting


MONODROMY_TOL = 1e-8


def _full_variational(scaling, z0, T, tol):
    """Endpoint at ``tol`` and monodromy at a looser tolerance.

    The Jacobian is a finite difference, so its noise would force tiny steps
    at ``tol``; Newton only needs it approximately.
    """
    zT = integrate_reeb(scaling, z0, T, tol).z[-1]
    y0 = np.concatenate([z0, np.eye(4).ravel()])
    rt = max(tol, MONODROMY_TOL)
    sol = solve_ivp(_variational_rhs(scaling, 4), (0.0, T), y0, method="DOP853",
                    rtol=rt, atol=rt * 1e-2, max_step=0.05)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    return zT, sol.y[4:, -1].reshape(4, 4)


def find_orbit_shooting(scaling, seed, period_guess, tol=1e-10, max_iter=25,
                        integration_tol=1e-12, linearize=True):
    """Newton iteration on a transverse section through ``seed`` with the
    return time as extra unknown.  Returns a ClosedOrbit or None."""
    seed = _project(np.asarray(seed, dtype=float))
    if min(np.hypot(seed[0], seed[1]), np.hypot(seed[2], seed[3])) <= 1e-6:
        raise InvalidInput("seed lies on the Hopf link")
    Xs = reeb_vector(scaling, seed)
    n = Xs / np.linalg.norm(Xs)
    e1, e2 = frame(seed)
    Q, _ = np.linalg.qr(np.stack([seed, n, e1, e2], axis=1))
    u1, u2 = Q[:, 2], Q[:, 3]

    def section(w):
        v = seed + w[0] * u1 + w[1] * u2
        r = np.linalg.norm(v)
        z = v / r
        P = (np.eye(4) - np.outer(z, z)) / r
        return z, P @ u1, P @ u2

    def residual(w):
        z, da, db = section(w)
        zT, M = _full_variational(scaling, z, w[2], integration_tol)
        return zT - z, z, zT, M, da, db

    w = np.array([0.0, 0.0, float(period_guess)])
    R, z, zT, M, da, db = residual(w)
    for _ in range(max_iter):
        if np.linalg.norm(R) < tol:
            break
        Xz = reeb_vector(scaling, z)
        if abs(Xz @ n) < 0.1 * np.linalg.norm(Xz):
            raise ReseedRequired("section lost transversality to the flow")
        Jm = np.stack([M @ da - da, M @ db - db, reeb_vector(scaling, zT)], axis=1)
        step = np.linalg.lstsq(Jm, -R, rcond=1e-10)[0]
        lam = 1.0
        for _ in range(8):
            trial = w + lam * step
            if trial[2] <= 0:
                lam *= 0.5
                continue
            out = residual(trial)
            if np.linalg.norm(out[0]) < np.linalg.norm(R):
                break
            lam *= 0.5
        else:
            return None
        w = trial
        R, z, zT, M, da, db = out
    else:
        return None
    if np.linalg.norm(R) >= tol:
        return None
    try:
        return make_closed_orbit(scaling, z, w[2], linearize=linearize)
    except NumericalFailure:
        return None
