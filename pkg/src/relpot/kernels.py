"""Deterministic kernels of the relativistic stable process.

Brownian motion here has generator Delta (variance 2u per coordinate at time
u).  That convention is fixed in ``gaussian_kernel`` and every Gaussian
constant below is derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, SingularityError, ToleranceError
from .special_fns import DEFAULT_QUAD, QuadSpec, bessel_k, gauss_legendre, tanh_sinh
from .subordinator import ProcessParams, clock_lower, theta_density

HALFSPACE = "halfspace"
HALFLINE = "halfline"
INTERVAL = "interval"
BALL = "ball"
_KINDS = (HALFSPACE, HALFLINE, INTERVAL, BALL)


@dataclass(frozen=True)
class Domain:
    """An open set: half-space {x_d > 0}, half-line, interval (0, R) or ball B(0, R)."""

    kind: str
    d: int = 1
    R: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.kind in (INTERVAL, BALL):
            if self.R is None or not self.R > 0:
                raise DomainError(f"{self.kind} needs R > 0")
        if self.kind in (HALFLINE, INTERVAL) and self.d != 1:
            raise DomainError(f"{self.kind} is one-dimensional")
        if self.kind == HALFLINE:
            object.__setattr__(self, "kind", HALFSPACE)

    @classmethod
    def halfspace(cls, d: int = 1):
        return cls(HALFSPACE, d)

    @classmethod
    def halfline(cls):
        return cls(HALFSPACE, 1)

    @classmethod
    def interval(cls, R: float):
        return cls(INTERVAL, 1, float(R))

    @classmethod
    def ball(cls, R: float, d: int):
        return cls(BALL, d, float(R))

    @property
    def bounded(self) -> bool:
        return self.kind != HALFSPACE

    def contains(self, x, closed: bool = False):
        p = as_points(x, self.d)
        if self.kind == HALFSPACE:
            v = p[..., -1]
            inside = v >= 0 if closed else v > 0
        elif self.kind == INTERVAL:
            v = p[..., 0]
            inside = (v >= 0) & (v <= self.R) if closed else (v > 0) & (v < self.R)
        else:
            v = np.linalg.norm(p, axis=-1)
            inside = v <= self.R if closed else v < self.R
        return bool(inside) if np.ndim(inside) == 0 else inside


def as_points(x, d: int) -> np.ndarray:
    """Coerce input to an array whose last axis holds the d coordinates.

    For d = 1 a bare scalar or an array without a trailing unit axis is read
    as a collection of one-dimensional points.
    """
    a = np.asarray(x, dtype=float)
    if d == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        a = a[..., None]
    if a.shape[-1] != d:
        raise DomainError(f"points must have {d} coordinates, got shape {a.shape}")
    return a


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _infer_d(x):
    return 1 if np.ndim(x) == 0 else np.shape(x)[-1]


# ---------------------------------------------------------------------------
# Gaussian kernel and Levy density


def gaussian_kernel(u, x, d: int | None = None):
    """Brownian transition density with variance 2u per coordinate."""
    d = _infer_d(x) if d is None else d
    u = np.asarray(u, dtype=float)
    if not np.all(u > 0):
        raise DomainError("gaussian_kernel requires u > 0")
    r2 = np.sum(as_points(x, d) ** 2, axis=-1)
    return _out((4 * np.pi * u) ** (-d / 2) * np.exp(-r2 / (4 * u)))


def stable_levy_constant(alpha: float, d: int) -> float:
    """Constant of the isotropic stable Levy density c |x|^{-d-alpha}."""
    return (alpha * 2 ** (alpha - 1) * math.gamma((d + alpha) / 2)
            / (math.pi ** (d / 2) * math.gamma(1 - alpha / 2)))


def _levy_unit_mass(r, alpha, d):
    """Levy density of the m = 1 process at radius r (closed Bessel form)."""
    nu = (d + alpha) / 2
    front = alpha * 2 ** ((alpha - d) / 2) / (math.pi ** (d / 2) * math.gamma(1 - alpha / 2))
    return front * r ** (-nu) * bessel_k(nu, r, scaled=True) * np.exp(-r)


def _levy_integral_one(r, alpha, d, rate):
    front = alpha / (2 * math.gamma(1 - alpha / 2))
    power = (d + alpha) / 2

    def f(s):
        return math.exp(-rate * math.exp(s) - r * r / 4 * math.exp(-s) - power * s) * (4 * math.pi) ** (-d / 2)

    # in s = log u the integrand decays double exponentially to the left and
    # double exponentially (m > 0) or like exp(-power s) (m = 0) to the right
    centre = math.log(r * r / (4 * power))
    s_lo = math.log(r * r / 3200.0)
    s_hi = math.log(800.0 / rate) if rate > 0 else centre + 80.0 / power
    s_hi = max(s_hi, centre + 1.0)
    val = 0.0
    for a, b in ((s_lo, centre), (centre, s_hi)):
        val += integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
    return front * val


def levy_density(x, params: ProcessParams, method: str = "bessel", d: int | None = None):
    """Levy density nu_m(x).

    ``method="bessel"`` uses the closed Macdonald form for m = 1 and the mass
    scaling nu_m(x) = m^{1+d/alpha} nu_1(m^{1/alpha} x); m = 0 gives the stable
    density.  ``method="integral"`` evaluates the subordination integral
    alpha/(2 Gamma(1-alpha/2)) int exp(-m^{2/alpha} u) g_u(x) u^{-1-alpha/2} du
    by adaptive quadrature and serves as an independent route.
    """
    d = params.d if d is None else d
    r = np.linalg.norm(as_points(x, d), axis=-1)
    if np.any(r == 0):
        raise SingularityError("Levy density is singular at the origin")
    alpha, m = params.alpha, params.m
    if method == "integral":
        flat = np.atleast_1d(r).ravel()
        vals = np.array([_levy_integral_one(v, alpha, d, params.tilt_rate) for v in flat])
        return _out(vals.reshape(np.shape(r)))
    if method != "bessel":
        raise DomainError(f"unknown method {method!r}")
    if m == 0:
        return _out(stable_levy_constant(alpha, d) * r ** (-d - alpha))
    scale = m ** (1 / alpha)
    return _out(m ** (1 + d / alpha) * _levy_unit_mass(scale * r, alpha, d))


# ---------------------------------------------------------------------------
# transition density by subordination

_LOG_STEP = 1.0 / 32.0


@lru_cache(maxsize=256)
def _clock_rule(alpha: float, m: float, t: float, n_nodes: int, refine: int):
    """Nodes u_k and weights w_k with int f(u) theta(t,u,m) du ~ sum w_k f(u_k)."""
    params = ProcessParams(alpha, m)
    s_lo = math.log(clock_lower(t, params))
    h = _LOG_STEP / refine
    s = s_lo + h * np.arange(n_nodes * refine)
    u = np.exp(s)
    w = h * u * theta_density(t, u, params)
    u.flags.writeable = False
    w.flags.writeable = False
    return u, w


def _clock_upper(params, t, r_max):
    beta = params.beta
    if params.m > 0:
        rate = params.tilt_rate
        return (params.m * t + 80.0 + 2.0 * r_max * math.sqrt(rate)) / rate
    ref = max(t ** (1 / beta), r_max ** 2, 1.0)
    return ref * math.exp(40.0 / (beta + params.d / 2))


def transition_density(t: float, x, params: ProcessParams, quad: QuadSpec = DEFAULT_QUAD,
                       return_error: bool = False):
    """p_t(x) = int theta(t,u,m) g_u(x) du, by the trapezoid rule in log u.

    The rule is evaluated at two step sizes; their difference is the error
    estimate.  Raises ToleranceError when it exceeds the requested tolerance.
    """
    if not t > 0:
        raise DomainError("transition_density requires t > 0")
    d = params.d
    r2 = np.sum(as_points(x, d) ** 2, axis=-1)
    beta = params.beta
    s_lo = math.log(clock_lower(t, params))
    s_hi = math.log(_clock_upper(params, t, float(np.sqrt(np.max(r2)))))
    n_nodes = int(math.ceil((s_hi - s_lo) / _LOG_STEP / 64.0)) * 64
    flat = np.atleast_1d(r2).ravel()

    # the tilted clock concentrates: relative spread sqrt((1-beta)/(beta m t))
    base = 1
    if params.m > 0:
        spread = math.sqrt((1 - beta) / (beta * params.m * t))
        base = max(1, math.ceil(4 * _LOG_STEP / spread))

    def evaluate(refine):
        u, w = _clock_rule(params.alpha, params.m, float(t), n_nodes, base * refine)
        out = np.empty_like(flat)
        for start in range(0, flat.size, 256):
            block = flat[start:start + 256]
            g = (4 * np.pi * u[None, :]) ** (-d / 2) * np.exp(-block[:, None] / (4 * u[None, :]))
            out[start:start + 256] = g @ w
        return out

    coarse, fine = evaluate(1), evaluate(2)
    err = np.abs(fine - coarse)
    bound = np.maximum(quad.abs_tol, quad.rel_tol * np.abs(fine))
    if np.any(err > bound):
        raise ToleranceError("transition density quadrature did not converge", achieved=float(err.max()))
    val = _out(fine.reshape(np.shape(r2)))
    return (val, _out(err.reshape(np.shape(r2)))) if return_error else val


# ---------------------------------------------------------------------------
# resolvent kernels for m = 1


def _require_unit_mass(params):
    if params.m != 1.0:
        raise DomainError("this kernel is defined for the unit-mass process (m = 1)")


def potential_u1(x, params: ProcessParams):
    """1-potential U_1(x) = C K_{(d-alpha)/2}(|x|) / |x|^{(d-alpha)/2}."""
    _require_unit_mass(params)
    d, alpha = params.d, params.alpha
    r = np.linalg.norm(as_points(x, d), axis=-1)
    if np.any(r == 0):
        raise SingularityError("1-potential is singular at the origin")
    const = 2 ** (1 - (d + alpha) / 2) / (math.gamma(alpha / 2) * math.pi ** (d / 2))
    nu = (d - alpha) / 2
    return _out(const * bessel_k(nu, r) / r ** nu)


def poisson1_halfspace(x, u, params: ProcessParams):
    """Density of E^x[exp(-tau_H); X_tau in du] for the half-space."""
    _require_unit_mass(params)
    d, alpha = params.d, params.alpha
    xp, up = as_points(x, d), as_points(u, d)
    if np.any(xp[..., -1] <= 0):
        raise DomainError("x must lie in the half-space")
    if np.any(up[..., -1] >= 0):
        raise DomainError("u must lie strictly below the boundary")
    r = np.linalg.norm(xp - up, axis=-1)
    front = 2 * math.sin(alpha * math.pi / 2) / math.pi * (2 * math.pi) ** (-d / 2)
    ratio = (xp[..., -1] / -up[..., -1]) ** (alpha / 2)
    return _out(front * ratio * bessel_k(d / 2, r) / r ** (d / 2))


_NEAR_DIAGONAL = 1e-6
_K_DECAY = 46.0


def _green1_t_integral(r, T, alpha, d, panels_per_efold=1, order=24, ts_level=5):
    """int_0^T t^{alpha/2-1} (1+t)^{-d/4} K_{d/2}(r sqrt(1+t)) dt, vectorized.

    With t = v^{2/alpha} the weight t^{alpha/2-1} dt becomes (2/alpha) dv.
    [0, min(V,1)] uses tanh-sinh; [1, V] uses Gauss panels in log v.
    """
    t_cut = (1.0 + _K_DECAY / r) ** 2 - 1.0
    V = np.minimum(T, t_cut) ** (alpha / 2)

    def f(v, rr):
        t = v ** (2 / alpha)
        z = rr * np.sqrt(1.0 + t)
        return (1.0 + t) ** (-d / 4) * bessel_k(d / 2, z, scaled=True) * np.exp(-z)

    left, _, w = tanh_sinh(ts_level)
    v1 = np.minimum(V, 1.0)
    nodes = v1[:, None] * left[None, :]
    total = v1 * (f(nodes, r[:, None]) @ w)
    far = V > 1.0
    if far.any():
        lv = np.log(V[far])
        n_panels = max(1, int(math.ceil(lv.max() * panels_per_efold)))
        x, gw = gauss_legendre(order)
        edges = np.linspace(0.0, 1.0, n_panels + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1] - edges[0])
        frac = (mids[:, None] + half * x[None, :]).ravel()
        wts = np.tile(half * gw, n_panels)
        logv = lv[:, None] * frac[None, :]
        v = np.exp(logv)
        vals = f(v, r[far][:, None]) * v
        total[far] += lv * (vals @ wts)
    return 2.0 / alpha * total


def green1_halfspace(x, y, params: ProcessParams, quad: QuadSpec = DEFAULT_QUAD,
                     return_error: bool = False):
    """1-Green function of the half-space for the unit-mass process."""
    _require_unit_mass(params)
    d, alpha = params.d, params.alpha
    xp, yp = np.broadcast_arrays(as_points(x, d), as_points(y, d))
    if np.any(xp[..., -1] <= 0) or np.any(yp[..., -1] <= 0):
        raise DomainError("points must lie in the half-space")
    r = np.linalg.norm(xp - yp, axis=-1)
    if np.any(r < _NEAR_DIAGONAL):
        raise SingularityError("1-Green function requested too close to the diagonal")
    T = 4 * xp[..., -1] * yp[..., -1] / r ** 2
    rf, Tf = np.atleast_1d(r).ravel(), np.atleast_1d(T).ravel()
    coarse = _green1_t_integral(rf, Tf, alpha, d)
    fine = _green1_t_integral(rf, Tf, alpha, d, panels_per_efold=2, ts_level=6)
    err = np.abs(fine - coarse)
    if np.any(err > np.maximum(quad.abs_tol, quad.rel_tol * np.abs(fine))):
        raise ToleranceError("1-Green quadrature did not converge", achieved=float(err.max()))
    const = 2 ** (1 - alpha) / ((2 * math.pi) ** (d / 2) * math.gamma(alpha / 2) ** 2)
    val = const * rf ** (alpha - d / 2) * fine
    out = _out(val.reshape(np.shape(r)))
    if return_error:
        return out, _out((const * rf ** (alpha - d / 2) * err).reshape(np.shape(r)))
    return out


# ---------------------------------------------------------------------------
# Brownian Green functions (generator Delta)


def newton_constant(d: int) -> float:
    """C(d) with int_0^inf g_u(x) du = C(d) |x|^{2-d}, d >= 3."""
    return math.gamma(d / 2 - 1) / (4 * math.pi ** (d / 2))


def green_gauss(domain: Domain, x, y):
    """Green function of Brownian motion with generator Delta killed off ``domain``."""
    d = domain.d
    xp, yp = np.broadcast_arrays(as_points(x, d), as_points(y, d))
    if not (np.all(domain.contains(xp, closed=True)) and np.all(domain.contains(yp, closed=True))):
        raise DomainError("points must lie in the closure of the domain")
    if domain.kind == INTERVAL or (domain.kind == BALL and d == 1):
        shift = 0.0 if domain.kind == INTERVAL else domain.R
        length = domain.R if domain.kind == INTERVAL else 2 * domain.R
        a, b = xp[..., 0] + shift, yp[..., 0] + shift
        return _out(np.minimum(a * (length - b), b * (length - a)) / length)
    if domain.kind == HALFSPACE:
        if d == 1:
            return _out(np.minimum(xp[..., 0], yp[..., 0]))
        r2 = np.sum((xp - yp) ** 2, axis=-1)
        prod = xp[..., -1] * yp[..., -1]
        if d == 2:
            with np.errstate(divide="ignore"):
                return _out(np.log1p(4 * prod / r2) / (4 * math.pi))
        r2_star = r2 + 4 * prod
        return _out(newton_constant(d) * (r2 ** (1 - d / 2) - r2_star ** (1 - d / 2)))
    # ball of radius R, d >= 2: Kelvin reflection of the pole
    R = domain.R
    r2 = np.sum((xp - yp) ** 2, axis=-1)
    cross = np.sum(xp * yp, axis=-1)
    image2 = np.sum(xp ** 2, axis=-1) * np.sum(yp ** 2, axis=-1) / R ** 2 - 2 * cross + R ** 2
    if d == 2:
        with np.errstate(divide="ignore"):
            return _out(np.log(image2 / r2) / (4 * math.pi))
    return _out(newton_constant(d) * (r2 ** (1 - d / 2) - image2 ** (1 - d / 2)))


# ---------------------------------------------------------------------------
# isotropic stable Green function of the half-space


def stable_halfspace_constant(alpha: float, d: int) -> float:
    return math.gamma(d / 2) / (2 ** alpha * math.pi ** (d / 2) * math.gamma(alpha / 2) ** 2)


def _stable_t_integral(T, alpha, d):
    a, b = alpha / 2, (d - alpha) / 2
    return special.beta(a, b) * special.betainc(a, b, T / (1 + T))


def green_stable_halfspace(x, y, params: ProcessParams, constant: float | None = None):
    """Green function of the half-space for the isotropic alpha-stable process."""
    d, alpha = params.d, params.alpha
    if not alpha < d:
        raise DomainError("the stable half-space formula needs alpha < d")
    xp, yp = np.broadcast_arrays(as_points(x, d), as_points(y, d))
    if np.any(xp[..., -1] <= 0) or np.any(yp[..., -1] <= 0):
        raise DomainError("points must lie in the half-space")
    r = np.linalg.norm(xp - yp, axis=-1)
    if np.any(r == 0):
        raise SingularityError("stable Green function is singular on the diagonal")
    T = 4 * xp[..., -1] * yp[..., -1] / r ** 2
    c = stable_halfspace_constant(alpha, d) if constant is None else constant
    return _out(c * r ** (alpha - d) * _stable_t_integral(T, alpha, d))
