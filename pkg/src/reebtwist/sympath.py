"""Index toolkit for paths in the 2x2 symplectic group.

Conventions: the complex structure is ``J = [[0, -1], [1, 0]]`` (multiplication
by i on R^2 = C), paths solve ``phi' = J S(t) phi`` with ``S`` symmetric and
1-periodic, and all angles are measured in full turns.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (ConsistencyFailure, DegeneratePath, IntegrationFailure,
                     InvalidInput, IterateDegeneracy, NumericalFailure)

J = np.array([[0.0, -1.0], [1.0, 0.0]])
TWO_PI = 2.0 * math.pi

DEGENERACY_TOL = 1e-8
ZERO_EIGENVALUE_TOL = 1e-9


def wrap_half(x):
    """Reduce turns to the interval [-1/2, 1/2]."""
    return x - np.round(x)


def rotation_matrix(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _as_t(t):
    return np.atleast_1d(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class HamiltonianLoop:
    """1-periodic symmetric generator ``S(t)``.

    ``S`` may accept a scalar or a 1-D array of times; in the array case it
    should return an array of shape (n, 2, 2).
    """

    S: Callable
    sample_count: int = 256
    name: str = "loop"

    def sample(self, t):
        t = _as_t(t)
        try:
            out = np.asarray(self.S(t), dtype=float)
            if out.shape == (t.size, 2, 2):
                return out
        except (TypeError, ValueError):
            pass
        return np.array([np.asarray(self.S(float(s)), dtype=float).reshape(2, 2)
                         for s in t])

    def validate(self):
        if self.sample_count < 1:
            raise InvalidInput("sample_count must be positive")
        t = np.arange(self.sample_count) / self.sample_count
        m = self.sample(t)
        if not np.all(np.isfinite(m)):
            raise InvalidInput(f"generator {self.name!r} has non-finite samples")
        scale = max(1.0, float(np.abs(m).max()))
        asym = float(np.abs(m - np.swapaxes(m, 1, 2)).max())
        if asym > 1e-12 * scale:
            raise InvalidInput(
                f"generator {self.name!r} is not symmetric (defect {asym:.3e})")
        ends = self.sample([0.0, 1.0])
        gap = float(np.abs(ends[0] - ends[1]).max())
        if gap > 1e-8 * scale:
            raise InvalidInput(
                f"generator {self.name!r} is not 1-periodic (gap {gap:.3e})")
        return self


def constant_loop(matrix, name="constant"):
    m = np.asarray(matrix, dtype=float).reshape(2, 2)

    def S(t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return m.copy()
        return np.broadcast_to(m, (t.size, 2, 2)).copy()

    return HamiltonianLoop(S, name=name)


def rotation_loop(alpha):
    """Generator of the rigid rotation by angle ``2 pi alpha t``."""
    return constant_loop(TWO_PI * alpha * np.eye(2), name=f"rotation:alpha={alpha}")


def trig_loop(a0, cos_terms=(), sin_terms=(), name="trig"):
    """``S(t) = A0 + sum_n A_n cos(2 pi n t) + B_n sin(2 pi n t)``, n = 1, 2, ..."""
    a0 = np.asarray(a0, dtype=float).reshape(2, 2)
    ca = [np.asarray(c, dtype=float).reshape(2, 2) for c in cos_terms]
    sa = [np.asarray(s, dtype=float).reshape(2, 2) for s in sin_terms]
    order = max(len(ca), len(sa))

    def S(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.broadcast_to(a0, (t.size, 2, 2)).copy()
        for n, c in enumerate(ca, start=1):
            out += np.cos(TWO_PI * n * t)[:, None, None] * c
        for n, s in enumerate(sa, start=1):
            out += np.sin(TWO_PI * n * t)[:, None, None] * s
        return out[0] if scalar else out

    return HamiltonianLoop(S, sample_count=max(256, 64 * order), name=name)


def elliptic_loop(alpha, P=None):
    """Generator of ``P R(2 pi alpha t) P^{-1}`` for a symplectic ``P``."""
    if P is None:
        return rotation_loop(alpha)
    P = np.asarray(P, dtype=float)
    if abs(np.linalg.det(P) - 1.0) > 1e-12:
        raise InvalidInput("conjugating matrix must have determinant 1")
    X = P @ P.T
    return constant_loop(TWO_PI * alpha * (J.T @ X @ J), name=f"elliptic:alpha={alpha}")


def hyperbolic_loop(l, a=1.0, negative=False):
    """Generator of ``R(w t) diag(e^{a t}, e^{-a t})`` with ``w = 2 pi l``
    (positive hyperbolic) or ``w = 2 pi (l + 1/2)`` (negative hyperbolic)."""
    w = TWO_PI * (l + (0.5 if negative else 0.0))

    def S(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        s2, c2 = np.sin(2 * w * t), np.cos(2 * w * t)
        out = np.empty((t.size, 2, 2))
        out[:, 0, 0] = w + a * s2
        out[:, 1, 1] = w - a * s2
        out[:, 0, 1] = out[:, 1, 0] = -a * c2
        return out[0] if scalar else out

    kind = "neghyperbolic" if negative else "hyperbolic"
    n = max(256, int(64 * (abs(l) + 1)))
    return HamiltonianLoop(S, sample_count=n, name=f"{kind}:l={l},a={a}")


def hyperbolic_closed_form(l, a, t, negative=False):
    w = TWO_PI * (l + (0.5 if negative else 0.0))
    return rotation_matrix(w * t) @ np.diag([math.exp(a * t), math.exp(-a * t)])


def sampled_loop(t, s11, s12, s22, name="samples"):
    """Trigonometric interpolation of samples on a uniform grid of [0, 1)."""
    t = np.asarray(t, dtype=float)
    n = t.size
    if n < 4:
        raise InvalidInput("need at least 4 generator samples")
    if np.abs(t - np.arange(n) / n).max() > 1e-9:
        raise InvalidInput("generator samples must lie on the uniform grid k/n of [0, 1)")
    data = np.stack([s11, s12, s22], axis=1).astype(float)
    coef = np.fft.rfft(data, axis=0) / n
    freqs = np.arange(coef.shape[0])
    if n % 2 == 0:
        coef[-1] *= 0.5
    weights = np.where(freqs == 0, 1.0, 2.0)

    def S(tt):
        tt = np.asarray(tt, dtype=float)
        scalar = tt.ndim == 0
        tt = np.atleast_1d(tt)
        ph = np.exp(2j * math.pi * np.outer(tt, freqs))
        vals = np.real(ph @ (coef * weights[:, None]))
        out = np.empty((tt.size, 2, 2))
        out[:, 0, 0] = vals[:, 0]
        out[:, 0, 1] = out[:, 1, 0] = vals[:, 1]
        out[:, 1, 1] = vals[:, 2]
        return out[0] if scalar else out

    return HamiltonianLoop(S, sample_count=max(256, 4 * n), name=name)


def random_loop(rng, harmonics=2, amplitude=3.0):
    """Random symmetric trigonometric generator, for property tests."""
    def sym():
        m = rng.normal(scale=amplitude, size=(2, 2))
        return 0.5 * (m + m.T)

    a0 = sym()
    ca = [sym() / (n + 1) for n in range(harmonics)]
    sa = [sym() / (n + 1) for n in range(harmonics)]
    return trig_loop(a0, ca, sa, name="random")


def iterated_loop(generator, k):
    """Generator ``k S(k t)`` of the k-th iterate."""
    if k < 1:
        raise InvalidInput("iterate order must be positive")

    def S(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        out = k * generator.sample(np.mod(k * np.atleast_1d(t), 1.0))
        return out[0] if scalar else out

    return HamiltonianLoop(S, sample_count=generator.sample_count * k,
                           name=f"{generator.name}^({k})")


# --------------------------------------------------------------------------
# paths


def _exp_traceless(M):
    """Exponential of a stack of traceless 2x2 matrices."""
    d = -(M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0])
    r = np.sqrt(np.abs(d))
    small = r < 1e-8
    rs = np.where(small, 1.0, r)
    c = np.where(d >= 0, np.cosh(rs), np.cos(rs))
    s = np.where(d >= 0, np.sinh(rs), np.sin(rs)) / rs
    c = np.where(small, 1.0 + d / 2.0, c)
    s = np.where(small, 1.0 + d / 6.0, s)
    return c[:, None, None] * np.eye(2) + s[:, None, None] * M


def _snap(values):
    det = np.linalg.det(values)
    if np.any(det <= 0):
        raise IntegrationFailure("path left the symplectic group")
    return values / np.sqrt(det)[:, None, None]


def _cumulative_product(steps):
    """``out[j] = steps[j] @ ... @ steps[0]`` by a log-depth scan."""
    out = steps.copy()
    d = 1
    n = out.shape[0]
    while d < n:
        out[d:] = out[d:] @ out[:-d]
        out = _snap(out)
        d *= 2
    return out


def _magnus_path(generator, n):
    """Fourth-order Magnus integration over [0, 1] with ``n`` steps."""
    h = 1.0 / n
    g = 0.5 / math.sqrt(3.0)
    t0 = np.arange(n) * h
    S1 = generator.sample(t0 + (0.5 - g) * h)
    S2 = generator.sample(t0 + (0.5 + g) * h)
    A1 = J @ S1
    A2 = J @ S2
    comm = A2 @ A1 - A1 @ A2
    omega = 0.5 * h * (A1 + A2) + (math.sqrt(3.0) * h * h / 12.0) * comm
    omega -= 0.5 * np.trace(omega, axis1=1, axis2=2)[:, None, None] * np.eye(2)
    steps = _snap(_exp_traceless(omega))
    values = np.empty((n + 1, 2, 2))
    values[0] = np.eye(2)
    values[1:] = _cumulative_product(steps)
    return values


def evolve_path(generator, k=1, tol=1e-10, extend=True):
    """Integrate ``phi' = J S phi`` on [0, k].

    Each step is the exponential of a fourth-order Magnus update, so steps
    stay in the symplectic group; the determinant is renormalized after every
    composition.  The step count doubles until the endpoint changes by less
    than ``tol`` (Richardson estimate).  With ``extend`` the period map is
    reused through ``phi(t + j) = phi(t) phi(1)^j``; otherwise all of [0, k]
    is integrated directly.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    if k < 1 or int(k) != k:
        raise InvalidInput("k must be a positive integer")
    k = int(k)
    generator.validate()
    if not extend and k > 1:
        path = evolve_path(iterated_loop(generator, k), 1, tol)
        times = path.times * k
        return SymplecticPath(times, path.values, k, generator)
    n = max(64, generator.sample_count)
    prev = _magnus_path(generator, n)
    while True:
        cur = _magnus_path(generator, 2 * n)
        err = float(np.abs(cur[-1] - prev[-1]).max()) / 15.0
        err /= max(1.0, float(np.abs(cur[-1]).max()))
        n *= 2
        if err < tol:
            break
        if n > 2 ** 20:
            raise IntegrationFailure(
                f"step-size underflow: error {err:.3e} above tol {tol:.1e}")
        prev = cur
    path = SymplecticPath(np.linspace(0.0, 1.0, n + 1), cur, 1, generator)
    return path.iterate(k) if k > 1 else path


def _angles(vectors):
    return np.arctan2(vectors[..., 1, :], vectors[..., 0, :])


@dataclass(frozen=True, eq=False)
class SymplecticPath:
    """Sampled path ``phi`` on [0, k] with ``phi(0) = I``."""

    times: np.ndarray
    values: np.ndarray
    k: int = 1
    generator: Optional[HamiltonianLoop] = None

    def __post_init__(self):
        v = self.values
        if v.ndim != 3 or v.shape[1:] != (2, 2) or v.shape[0] != self.times.size:
            raise InvalidInput("path values must have shape (n, 2, 2)")
        if np.abs(v[0] - np.eye(2)).max() > 1e-9:
            raise InvalidInput("path must start at the identity")
        scale = np.maximum(1.0, np.einsum("nij,nij->n", v, v))
        if (np.abs(np.linalg.det(v) - 1.0) / scale).max() > 1e-9:
            raise InvalidInput("path leaves the symplectic group")

    @classmethod
    def from_samples(cls, times, values, k=1, generator=None):
        values = _snap(np.asarray(values, dtype=float))
        return cls(np.asarray(times, dtype=float), values, k, generator)

    @property
    def end(self):
        return self.values[-1]

    def track(self, s):
        """Continuous angle lift (turns) of ``phi(t) e^{2 pi i s}`` on every sample."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u = np.stack([np.cos(TWO_PI * s), np.sin(TWO_PI * s)])
        ang = _angles(self.values @ u)
        step = np.diff(ang, axis=0)
        step = step - TWO_PI * np.round(step / TWO_PI)
        if step.size and np.abs(step).max() > math.pi / 2:
            raise IntegrationFailure("path sampled too coarsely for angle tracking")
        lift = np.concatenate([ang[:1], ang[:1] + np.cumsum(step, axis=0)])
        return lift / TWO_PI

    @cached_property
    def _delta0(self):
        return float(self.track([0.0])[-1, 0])

    def delta(self, s):
        """``Delta(s) = theta(end, s)/(2 pi) - s`` for any ``s``.

        Uses the lifted value at ``s = 0`` and the fact that Delta varies by
        less than half a turn, which fixes the branch everywhere.
        """
        s = np.asarray(s, dtype=float)
        u = np.stack([np.cos(TWO_PI * s), np.sin(TWO_PI * s)])
        w = np.tensordot(self.end, u, axes=(1, 0))
        a = np.arctan2(w[1], w[0]) / TWO_PI
        d0 = self._delta0
        return d0 + wrap_half(a - s - d0)

    def iterate(self, j):
        """Path over [0, j k] obtained from the extension law."""
        if j < 1:
            raise InvalidInput("iterate order must be positive")
        if j == 1:
            return self
        n = self.times.size - 1
        period = self.times[-1]
        blocks = [self.values]
        power = np.eye(2)
        times = [self.times]
        for i in range(1, j):
            power = power @ self.end
            with np.errstate(all="ignore"):
                det = float(np.linalg.det(power))
            if not (math.isfinite(det) and det > 0 and np.isfinite(power).all()):
                raise IntegrationFailure(
                    f"iterate {j} overflows; use iterate_cz_index for its index")
            power = power / math.sqrt(det)
            blocks.append(self.values[1:] @ power)
            times.append(self.times[1:] + i * period)
        values = np.concatenate(blocks)
        return SymplecticPath(np.concatenate(times), _snap(values), self.k * j,
                              self.generator)

    def inverse(self, max_refine=6):
        """Pointwise inverse path ``t -> phi(t)^{-1}``.

        The inverse can turn faster than ``phi``; one-period paths with a
        generator are resampled until its angle track is resolved.
        """
        times, v = self.times, self.values
        for _ in range(max_refine + 1):
            inv = np.empty_like(v)
            inv[:, 0, 0] = v[:, 1, 1]
            inv[:, 1, 1] = v[:, 0, 0]
            inv[:, 0, 1] = -v[:, 0, 1]
            inv[:, 1, 0] = -v[:, 1, 0]
            out = SymplecticPath(times, inv, self.k, None)
            try:
                out.track([0.0])
                return out
            except IntegrationFailure:
                if self.generator is None or self.k != 1:
                    raise
            n = 2 * (times.size - 1)
            times = np.linspace(0.0, 1.0, n + 1)
            v = _magnus_path(self.generator, n)
        raise IntegrationFailure("inverse path unresolved after refinement")


@dataclass(frozen=True)
class WindingInterval:
    lo: float
    hi: float

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x):
        return self.lo <= x <= self.hi


def winding_interval(path, grid=512, strict=True):
    """``[min Delta, max Delta]`` over all initial directions.

    Delta has period 1/2 in ``s``; a uniform grid locates the extremes, which
    are then polished by bounded scalar minimization.
    """
    s = np.arange(grid) / (2.0 * grid)
    d = path.delta(s)
    h = 0.5 / grid

    def polish(i, sign):
        res = minimize_scalar(lambda x: sign * float(path.delta(x)),
                              bounds=(s[i] - h, s[i] + h), method="bounded",
                              options={"xatol": 1e-12})
        return min(sign * d[i], res.fun) * sign

    lo = polish(int(np.argmin(d)), 1.0)
    hi = polish(int(np.argmax(d)), -1.0)
    lo = min(lo, float(d.min()))
    hi = max(hi, float(d.max()))
    if strict and hi - lo >= 0.5:
        raise ConsistencyFailure(f"winding interval too wide: {hi - lo:.6f}")
    return WindingInterval(lo, hi)


def classify_matrix(M, tol=DEGENERACY_TOL):
    tr = float(np.trace(M))
    if abs(2.0 - tr) <= tol:
        return "degenerate"
    if abs(tr) < 2.0:
        return "elliptic"
    return "positive-hyperbolic" if tr > 2.0 else "negative-hyperbolic"


def cz_index_geometric(path, tol=DEGENERACY_TOL, interval=None):
    """Geometric Conley-Zehnder index from the winding interval."""
    I = interval or winding_interval(path)
    det = float(np.linalg.det(path.end - np.eye(2)))
    return _index_from_interval(I, det, tol)


def _index_from_interval(I, det, tol):
    edge = min(abs(wrap_half(I.lo)), abs(wrap_half(I.hi)))
    if abs(det) <= tol or edge <= tol:
        raise DegeneratePath(
            f"degenerate path: det(phi(1)-I)={det:.3e}, interval [{I.lo:.12f}, {I.hi:.12f}]")
    k = math.ceil(I.lo)
    if k <= I.hi:
        return 2 * k
    return 2 * math.floor(I.lo) + 1


# --------------------------------------------------------------------------
# asymptotic operator


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: tuple
    windings: tuple
    wind_minus: int
    wind_plus: int
    p: int
    modes: int = 0


def _fourier_coefficients(generator, N):
    G = max(64, 8 * N)
    t = np.arange(G) / G
    samples = generator.sample(t)
    return np.fft.fft(samples, axis=0) / G, G


def _galerkin(generator, N):
    shat, G = _fourier_coefficients(generator, N)
    n = np.arange(-N, N + 1)
    M = n.size
    idx = (n[:, None] - n[None, :]) % G
    blocks = -shat[idx]
    iJ = 1j * J
    blocks[np.arange(M), np.arange(M)] += -TWO_PI * n[:, None, None] * iJ
    H = blocks.transpose(0, 2, 1, 3).reshape(2 * M, 2 * M)
    H = 0.5 * (H + H.conj().T)
    evals, evecs = np.linalg.eigh(H)
    return evals, evecs, n


def _eigen_winding(coeffs, n, grid):
    c = coeffs.reshape(n.size, 2)
    while True:
        buf = np.zeros((grid, 2), dtype=complex)
        buf[n % grid] = c
        v = np.fft.ifft(buf, axis=0) * grid
        v = np.concatenate([v, v[:1]])
        re, im = v.real, v.imag
        vec = re if np.linalg.norm(re) >= np.linalg.norm(im) else im
        w = vec[:, 0] + 1j * vec[:, 1]
        ang = np.angle(w)
        step = np.diff(ang)
        step = step - TWO_PI * np.round(step / TWO_PI)
        if np.abs(step).max() < math.pi / 3 or grid > 2 ** 16:
            total = step.sum() / TWO_PI
            wnd = int(round(total))
            if abs(total - wnd) > 1e-3:
                raise NumericalFailure("eigenfunction winding is not an integer")
            return wnd
        grid *= 2


def asymptotic_spectrum(generator, window=2, tol=1e-7, max_modes=1024):
    """Spectrum of ``L = -J d/dt - S`` near zero with eigenfunction windings.

    Fourier-Galerkin discretization on modes -N..N; N doubles until the
    reported eigenvalues move by less than ``tol``.
    """
    if window < 1:
        raise InvalidInput("window must be at least 1")
    generator.validate()
    span = 2 * (window + 1)
    bound = float(np.abs(generator.sample(np.arange(64) / 64)).max())
    N = 16
    while TWO_PI * N < 4 * (TWO_PI * (window + 2) + bound):
        N *= 2
    prev = None
    while True:
        evals, evecs, n = _galerkin(generator, N)
        i0 = int(np.searchsorted(evals, -ZERO_EIGENVALUE_TOL))
        sel = np.arange(i0 - span, i0 + span)
        cur = evals[sel]
        inside = np.abs(cur).max() < math.pi * N
        if prev is not None and inside and np.abs(cur - prev).max() < tol:
            break
        if 2 * N > max_modes:
            raise NumericalFailure("asymptotic spectrum did not stabilize")
        prev = cur if inside else None
        N *= 2
    grid = max(512, 16 * N)
    winds = [_eigen_winding(evecs[:, i], n, grid) for i in sel]
    if any(b < a for a, b in zip(winds, winds[1:])):
        raise ConsistencyFailure(f"eigenvalue windings not monotone: {winds}")
    for w in range(min(winds) + 1, max(winds)):
        if winds.count(w) != 2:
            raise ConsistencyFailure(f"winding level {w} has {winds.count(w)} eigenvalues")
    wm, wp = winds[span - 1], winds[span]
    p = wp - wm
    if p not in (0, 1):
        raise ConsistencyFailure(f"wind_plus - wind_minus = {p}")
    return SpectralDecomposition(tuple(float(x) for x in cur), tuple(winds),
                                 wm, wp, p, N)


def cz_index_analytic(spec):
    return 2 * spec.wind_minus + spec.p


@dataclass(frozen=True)
class IndexReport:
    mu_geometric: Optional[int]
    mu_analytic: int
    interval: WindingInterval
    spectrum: SpectralDecomposition
    orbit_type: str


def index_report(generator, window=2, tol=1e-10):
    path = evolve_path(generator, 1, tol)
    I = winding_interval(path)
    kind = classify_matrix(path.end)
    try:
        mu = cz_index_geometric(path, interval=I)
    except DegeneratePath:
        mu, kind = None, "degenerate"
    spec = asymptotic_spectrum(generator, window)
    mu_a = cz_index_analytic(spec)
    if mu is not None and mu != mu_a:
        raise ConsistencyFailure(f"geometric index {mu} != analytic index {mu_a}")
    return IndexReport(mu, mu_a, I, spec, kind)


# --------------------------------------------------------------------------
# iterates and rotation number


def elliptic_rotation(M, interval):
    """Rotation number of an elliptic period map.

    The fractional part comes from the eigenvalue argument and the rotation
    direction (sign of the lower-left entry); the integer part is the floor
    of the winding interval.
    """
    tr = float(np.trace(M))
    frac = math.acos(max(-1.0, min(1.0, tr / 2.0))) / TWO_PI
    if M[1, 0] < 0:
        frac = 1.0 - frac
    return math.floor(interval.lo) + frac


@dataclass(frozen=True)
class IterateProfile:
    orbit_type: str
    parameter: float
    rows: tuple
    predicted: tuple

    @property
    def matches(self):
        return self.rows == self.predicted


def predicted_iterates(orbit_type, parameter, k_max):
    rows = []
    for k in range(1, k_max + 1):
        if orbit_type == "elliptic":
            m = math.floor(k * parameter)
            rows.append((k, 2 * m + 1, m, m + 1))
        elif orbit_type == "positive-hyperbolic":
            l = int(parameter)
            rows.append((k, 2 * k * l, k * l, k * l))
        else:
            l = int(parameter)
            if k % 2 == 0:
                w = k * (2 * l + 1) // 2
                rows.append((k, k * (2 * l + 1), w, w))
            else:
                w = math.floor(k * (l + 0.5))
                rows.append((k, k * (2 * l + 1), w, w + 1))
    return tuple(rows)


def _check_roots_of_unity(M, k_max, tol=DEGENERACY_TOL):
    tr = float(np.trace(M))
    if abs(tr - 2.0) <= tol:
        raise IterateDegeneracy("period map has eigenvalue 1", k=1)
    if abs(tr + 2.0) <= tol:
        raise IterateDegeneracy("period map has eigenvalue -1", k=2)
    if abs(tr) < 2.0:
        turns = math.acos(tr / 2.0) / TWO_PI
        for k in range(1, k_max + 1):
            if abs(wrap_half(k * turns)) * TWO_PI <= math.sqrt(tol):
                raise IterateDegeneracy(
                    f"eigenvalue of the period map is a root of unity of order {k}", k=k)


def iterate_index_profile(generator, k_max, tol=1e-10):
    """Indices and extremal windings of the iterates 1..k_max, with the
    prediction of the iteration law for the detected orbit type."""
    path = evolve_path(generator, 1, tol)
    M = path.end
    _check_roots_of_unity(M, k_max)
    I = winding_interval(path)
    kind = classify_matrix(M)
    if kind == "elliptic":
        param = elliptic_rotation(M, I)
    elif kind == "positive-hyperbolic":
        param = float(round(0.5 * (I.lo + I.hi)))
    else:
        param = float(math.floor(0.5 * (I.lo + I.hi)))
    rows = []
    for k in range(1, k_max + 1):
        mu = iterate_cz_index(path, k)
        spec = asymptotic_spectrum(iterated_loop(generator, k), window=1)
        rows.append((k, mu, spec.wind_minus, spec.wind_plus))
    return IterateProfile(kind, param, tuple(rows), predicted_iterates(kind, param, k_max))


@dataclass(frozen=True)
class RotationNumber:
    value: float
    error: float
    iterations: int


def _lifted_delta(M, d, s):
    u = np.array([math.cos(TWO_PI * s), math.sin(TWO_PI * s)])
    w = M @ u
    a = math.atan2(w[1], w[0]) / TWO_PI
    return d + float(wrap_half(a - s - d))


def _compose(outer, inner):
    """Lift of ``outer`` after ``inner``; each is (matrix, Delta(0))."""
    M2, d2 = outer
    M1, d1 = inner
    d = d1 + _lifted_delta(M2, d2, d1)
    M = M2 @ M1
    return M / np.linalg.norm(M), d


def birkhoff_sum(path, K):
    """``Delta(0) + Delta(f(0)) + ... + Delta(f^{K-1}(0))`` for the circle
    map ``f(s) = s + Delta(s)`` of the path, by binary composition."""
    base = (path.end / np.linalg.norm(path.end), path._delta0)
    result = (np.eye(2), 0.0)
    while K:
        if K & 1:
            result = _compose(base, result)
        K >>= 1
        if K:
            base = _compose(base, base)
    return result[1]


def path_rotation_number(path, k_max=2 ** 20):
    if k_max < 8:
        raise InvalidInput("k_max must be at least 8")
    full = birkhoff_sum(path, k_max) / k_max
    half = birkhoff_sum(path, k_max // 2) / (k_max // 2)
    err = max(1.0 / k_max, abs(full - half))
    return RotationNumber(full, err, k_max)


def rotation_number(generator, k_max=2 ** 20, tol=1e-10):
    """Rotation number of the path generated by ``generator``.

    Any lift satisfies ``|Delta^(K)(s) - K rho| < 1``, so ``1/K`` bounds the
    error of the Birkhoff average after K iterations.
    """
    return path_rotation_number(evolve_path(generator, 1, tol), k_max)


class _IteratedMap:
    """Projective data of ``phi(1)^k``: unit-norm matrix and lifted Delta(0)."""

    def __init__(self, matrix, delta0):
        self.end = matrix
        self._delta0 = delta0

    delta = SymplecticPath.delta


def _iterate_det(M, k):
    """``det(M^k - I) = 2 - tr(M^k)`` from the eigenvalues of ``M``, without
    forming the (possibly overflowing) power."""
    tr = float(np.trace(M))
    if abs(tr) < 2.0:
        return 2.0 - 2.0 * math.cos(k * math.acos(tr / 2.0))
    lam = 0.5 * (abs(tr) + math.sqrt(tr * tr - 4.0))
    x = k * math.log(lam)
    if x > 700.0:
        return -math.inf if (tr > 0 or k % 2 == 0) else math.inf
    sign = 1.0 if (tr > 0 or k % 2 == 0) else -1.0
    return 2.0 - sign * 2.0 * math.cosh(x)


def iterate_cz_index(path, k, tol=DEGENERACY_TOL):
    """Index of the k-th iterate from the k-fold lifted circle map.

    Only directions are composed, so strongly hyperbolic iterates do not
    overflow.
    """
    if k < 1 or int(k) != k:
        raise InvalidInput("k must be a positive integer")
    if path.k != 1:
        raise InvalidInput("iterate_cz_index expects a one-period path")
    base = (path.end / np.linalg.norm(path.end), path._delta0)
    result = (np.eye(2) / math.sqrt(2.0), 0.0)
    K = int(k)
    while K:
        if K & 1:
            result = _compose(base, result)
        K >>= 1
        if K:
            base = _compose(base, base)
    tr = float(np.trace(path.end))
    if abs(tr) <= 2.0 + tol:
        I = winding_interval(_IteratedMap(*result))
        return _index_from_interval(I, _iterate_det(path.end, k), tol)
    # hyperbolic: the interval is centred within 1/4 of an integer (positive)
    # or a half-integer (negative), and its width tends to 1/2 as k grows
    I = winding_interval(_IteratedMap(*result), strict=False)
    mid = 0.5 * (I.lo + I.hi)
    if tr > 0 or k % 2 == 0:
        return 2 * round(mid)
    return 2 * math.floor(mid) + 1
