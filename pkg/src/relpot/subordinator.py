"""The beta = alpha/2 stable subordinator and its exponential tilt.

The untilted subordinator has Laplace transform exp(-t * lam**beta).  With
mass m > 0 its law is tilted by exp(m*t - m**(2/alpha) * u), which gives the
clock of the relativistic process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .special_fns import tanh_sinh

_SERIES_SWITCH = 0.2  # use the large-u series when x**-beta <= this
_LOG_NEGLIGIBLE = 80.0


@dataclass(frozen=True)
class ProcessParams:
    """Stability index alpha in (0, 2), mass m >= 0 and dimension d >= 1."""

    alpha: float
    m: float = 1.0
    d: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.m >= 0.0:
            raise DomainError(f"m must be nonnegative, got {self.m}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "d", int(self.d))

    @property
    def beta(self) -> float:
        return 0.5 * self.alpha

    @property
    def tilt_rate(self) -> float:
        """Exponential tilt m**(2/alpha) applied to the subordinator."""
        return self.m ** (2.0 / self.alpha) if self.m > 0 else 0.0

    def with_(self, **changes) -> "ProcessParams":
        fields = {"alpha": self.alpha, "m": self.m, "d": self.d}
        fields.update(changes)
        return ProcessParams(**fields)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo controls.  Results depend only on the seed, n and dt."""

    n_samples: int = 100_000
    dt: float = 0.02
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError("n_samples must be a positive integer")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    def with_(self, **changes) -> "McConfig":
        fields = {"n_samples": self.n_samples, "dt": self.dt,
                  "master_seed": self.master_seed, "workers": self.workers}
        fields.update(changes)
        return McConfig(**fields)


# ---------------------------------------------------------------------------
# density of the unit-time untilted subordinator


def _zolotarev_log_a(beta, phi, phi_rest):
    """log A(phi) for phi in (0, pi); phi_rest = pi - phi, passed for accuracy."""
    sin_phi = np.sin(np.minimum(phi, phi_rest))
    return (beta * np.log(np.sin(beta * phi))
            + (1.0 - beta) * np.log(np.sin((1.0 - beta) * phi))
            - np.log(sin_phi)) / (1.0 - beta)


def _zolo_level(beta):
    # the integrand sharpens like 1/(1 - beta); finer steps keep ~1e-12 accuracy
    if beta <= 0.9:
        return 7
    if beta <= 0.95:
        return 9
    return 11 if beta <= 0.98 else 13


def _zolotarev_nodes(beta, level=None):
    level = _zolo_level(beta) if level is None else level
    left, right, w = tanh_sinh(level)
    phi = math.pi * left
    log_a = _zolotarev_log_a(beta, phi, math.pi * right)
    return np.exp(log_a), log_a, w


def _unit_density_zolotarev(beta, x, level=None):
    a, log_a, w = _zolotarev_nodes(beta, level)
    out = np.empty_like(x)
    pre = math.log(beta / (1.0 - beta))
    for start in range(0, x.size, 1024):
        xs = x[start:start + 1024]
        s = xs ** (-beta / (1.0 - beta))
        with np.errstate(over="ignore"):
            expo = (pre - np.log(xs) / (1.0 - beta))[:, None] + log_a[None, :] - a[None, :] * s[:, None]
        out[start:start + 1024] = np.exp(expo) @ w
    return out


def _unit_log_density_zolotarev(beta, x, level=None):
    # same integral as above, summed in log space so deep left tails survive
    a, log_a, w = _zolotarev_nodes(beta, level)
    keep = w > 0
    a, log_a, log_w = a[keep], log_a[keep], np.log(w[keep])
    out = np.empty_like(x)
    pre = math.log(beta / (1.0 - beta))
    for start in range(0, x.size, 1024):
        xs = x[start:start + 1024]
        s = xs ** (-beta / (1.0 - beta))
        expo = (pre - np.log(xs) / (1.0 - beta))[:, None] + (log_a + log_w)[None, :] - a[None, :] * s[:, None]
        out[start:start + 1024] = special.logsumexp(expo, axis=1)
    return out


def _unit_density_series(beta, x):
    y = x ** (-beta)
    total = np.zeros_like(x)
    power = np.ones_like(x)
    for k in range(1, 200):
        power = power * y
        size = math.exp(math.lgamma(beta * k + 1.0) - math.lgamma(k + 1.0))
        term = (-1) ** (k + 1) * size * math.sin(math.pi * beta * k) * power
        total += term
        if np.all(size * power <= 1e-17 * np.abs(total)):
            break
    return total / (math.pi * x)


def unit_density(beta: float, x):
    """Density at time 1 of the positive beta-stable law, Laplace exp(-lam**beta)."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    use_series = pos & (flat ** (-beta) <= _SERIES_SWITCH)
    use_zolo = pos & ~use_series
    if use_series.any():
        out[use_series] = _unit_density_series(beta, flat[use_series])
    if use_zolo.any():
        out[use_zolo] = _unit_density_zolotarev(beta, flat[use_zolo])
    return out.reshape(x.shape)


def unit_cdf(beta: float, x):
    """CDF at time 1 of the positive beta-stable law (single-integral form)."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    a, _, w = _zolotarev_nodes(beta)
    s = flat[pos] ** (-beta / (1.0 - beta))
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-np.outer(s, a)) @ w
    return np.clip(out, 0.0, 1.0).reshape(x.shape)


def lower_cutoff(beta: float, depth: float = _LOG_NEGLIGIBLE) -> float:
    """Point below which the unit density is smaller than exp(-depth)."""
    a0 = (beta ** beta * (1.0 - beta) ** (1.0 - beta)) ** (1.0 / (1.0 - beta))
    return (depth / a0) ** (-(1.0 - beta) / beta)


def clock_lower(t: float, params: "ProcessParams") -> float:
    """Point below which the (tilted) density at time t is negligible.

    The tilt multiplies the untilted density by up to exp(m t), so the
    untilted left tail has to be cut that much deeper.
    """
    return t ** (1.0 / params.beta) * lower_cutoff(params.beta, _LOG_NEGLIGIBLE + params.m * t)


# ---------------------------------------------------------------------------
# public operations


_LOG_TILT_DIRECT = 50.0


def _check_time(t):
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")


def theta_density(t: float, u, params: ProcessParams):
    """Density of the (tilted) subordinator at time t, evaluated at u > 0."""
    _check_time(t)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(u_arr > 0):
        raise DomainError("theta_density requires u > 0")
    beta = params.beta
    scale = t ** (1.0 / beta)
    val = unit_density(beta, u_arr / scale) / scale
    if params.m > 0:
        tilt = params.m * t - params.tilt_rate * u_arr
        if params.m * t > _LOG_TILT_DIRECT:
            # exp(m t) overflows and the untilted left tail underflows: work in logs
            z = np.ravel(u_arr / scale)
            left = z ** (-beta) > _SERIES_SWITCH
            logv = np.log(np.maximum(np.ravel(val), 1e-300))
            if left.any():
                logv[left] = _unit_log_density_zolotarev(beta, z[left])
            val = np.exp(logv.reshape(u_arr.shape) - math.log(scale) + tilt)
        else:
            val = val * np.exp(tilt)
    return float(val) if val.ndim == 0 else val


def theta_cdf(t: float, u, params: ProcessParams):
    """Distribution function of the (tilted) subordinator at time t."""
    _check_time(t)
    u_arr = np.asarray(u, dtype=float)
    beta = params.beta
    scale = t ** (1.0 / beta)
    if params.m == 0:
        val = unit_cdf(beta, u_arr / scale)
        return float(val) if val.ndim == 0 else val
    # integrate the tilted density on a logarithmic grid, then interpolate
    s_lo = math.log(clock_lower(t, params))
    s_hi = math.log(max(float(np.max(u_arr)), scale) * 1.0001)
    s = np.linspace(s_lo, s_hi, int((s_hi - s_lo) * 256) + 2)
    v = np.exp(s)
    dens = theta_density(t, v, params) * v
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    val = np.interp(np.log(np.maximum(u_arr, v[0])), s, cum)
    val = np.where(u_arr <= v[0], 0.0, np.clip(val, 0.0, 1.0))
    return float(val) if val.ndim == 0 else val


def subordinator_laplace(lam, t: float, params: ProcessParams):
    """E exp(-lam * T_t) = exp(m t) exp(-t (lam + m^{2/alpha})^{alpha/2})."""
    _check_time(t)
    lam_arr = np.asarray(lam, dtype=float)
    shifted = lam_arr + params.tilt_rate
    if np.any(shifted < 0):
        raise DomainError("lambda must be at least -m^(2/alpha)")
    val = np.exp(params.m * t - t * shifted ** params.beta)
    return float(val) if val.ndim == 0 else val


def _kanter(beta, t, rng, n):
    u = math.pi * rng.random(n)
    while True:
        bad = u == 0.0
        if not bad.any():
            break
        u[bad] = math.pi * rng.random(int(bad.sum()))
    e = rng.standard_exponential(n)
    log_a = _zolotarev_log_a(beta, u, math.pi - u)
    return t ** (1.0 / beta) * np.exp((1.0 - beta) / beta * (log_a - np.log(e)))


def sample_increment(t: float, params: ProcessParams, rng: np.random.Generator,
                     size=None, return_trials: bool = False):
    """Draw subordinator increments over time t.

    The untilted draw uses Kanter's representation; for m > 0 each draw is
    accepted with probability exp(-m^{2/alpha} u).  With ``return_trials``
    the total number of proposals is returned as well.
    """
    _check_time(t)
    n = 1 if size is None else int(np.prod(size))
    beta, rate = params.beta, params.tilt_rate
    out = np.empty(n)
    pending = np.arange(n)
    trials = 0
    while pending.size:
        draw = _kanter(beta, t, rng, pending.size)
        trials += pending.size
        if rate > 0:
            keep = rng.random(pending.size) < np.exp(-rate * draw)
        else:
            keep = np.ones(pending.size, bool)
        out[pending[keep]] = draw[keep]
        pending = pending[~keep]
    result = float(out[0]) if size is None else out.reshape(size)
    return (result, trials) if return_trials else result
