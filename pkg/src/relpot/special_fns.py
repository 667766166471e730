"""Special functions and quadrature rules used across the package.

The Macdonald function is computed from its integral representation

    K_nu(r) = 2^{-1-nu} r^nu  int_0^inf exp(-u - r^2/(4u)) u^{-1-nu} du.

With u = (r/2) e^s this becomes (1/2) int_R exp(nu*s - r*cosh(s)) ds, whose
integrand is analytic in a strip and decays double exponentially, so the
plain trapezoid rule converges geometrically.  Large arguments switch to the
Hankel asymptotic series, and half-integer orders use the terminating form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, RangeError, ToleranceError

_LOG_FLOAT_MAX = 709.0
_ASYMPTOTIC_SEAM = 30.0
_TAIL_DEPTH = 50.0
_CHUNK = 2048


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature controls shared by the kernel evaluators."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_refinements: int = 12
    truncation_radius: float = 50.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not self.truncation_radius > 0:
            raise DomainError("truncation_radius must be positive")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be at least 1")


DEFAULT_QUAD = QuadSpec()


# ---------------------------------------------------------------------------
# quadrature rules


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on (-1, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=16)
def tanh_sinh(level: int):
    """Tanh-sinh rule on (0, 1) with step 2**-level.

    Returns (left, right, weights) where left = node and right = 1 - node are
    both computed without cancellation, so endpoint singularities can be
    evaluated accurately from either side.
    """
    h = 2.0 ** (-level)
    t = np.arange(-int(3.2 / h), int(3.2 / h) + 1) * h
    y = 0.5 * math.pi * np.sinh(t)
    left = 0.5 * (1.0 + np.tanh(y))
    # 1 - (1 + tanh y)/2 = 1 / (1 + exp(2y)), computed stably for both signs
    right = np.where(y > 0, np.exp(-2 * y) / (1 + np.exp(-2 * y)), 1 / (1 + np.exp(np.minimum(2 * y, _LOG_FLOAT_MAX))))
    left = np.where(y < 0, np.exp(2 * y) / (1 + np.exp(2 * y)), left)
    w = 0.5 * h * 0.5 * math.pi * np.cosh(t) / np.cosh(y) ** 2
    keep = (left > 0) & (right > 0) & (w > 0)
    out = left[keep], right[keep], w[keep]
    for a in out:
        a.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Macdonald function


def _half_integer_order(nu):
    k = nu - 0.5
    return abs(k - round(k)) < 1e-14 and round(k) < 25


def _k_half_integer(nu, r, scaled):
    n = int(round(nu - 0.5))
    total = np.zeros_like(r)
    for k in range(n + 1):
        coef = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        total += coef * (2.0 * r) ** (-k)
    base = np.sqrt(math.pi / (2.0 * r)) * total
    return base if scaled else base * np.exp(-r)


def _k_asymptotic(nu, r, scaled):
    mu = 4.0 * nu * nu
    total = np.ones_like(r)
    term = np.ones_like(r)
    done = np.zeros(r.shape, bool)
    for k in range(1, 80):
        new = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * r)
        growing = np.abs(new) > np.abs(term)
        done |= growing
        term = np.where(done, 0.0, new)
        total += term
        if np.all(done | (np.abs(term) < 1e-17 * np.abs(total))):
            break
    base = np.sqrt(math.pi / (2.0 * r)) * total
    return base if scaled else base * np.exp(-r)


def _k_trapezoid(nu, r, scaled):
    # log integrand, shifted by r when scaled: nu*s - r*(cosh s - 1)
    rc = r[:, None]

    def phi(s):
        rr = rc if np.ndim(s) == 2 else r
        return nu * s - 2.0 * rr * np.sinh(0.5 * s) ** 2

    s_star = np.arcsinh(nu / r)
    peak = phi(s_star)
    shift = 0.0 if scaled else 1.0
    log_scale = peak - shift * r
    if np.any(log_scale > _LOG_FLOAT_MAX):
        raise RangeError(f"K_{nu} overflows for r={r[log_scale > _LOG_FLOAT_MAX].min():g}")

    def bracket(sign):
        step = np.ones_like(r)
        while True:
            low = phi(s_star + sign * step) - peak > -_TAIL_DEPTH
            if not low.any():
                break
            step = np.where(low, 2 * step, step)
        lo, hi = np.zeros_like(r), step
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            inside = phi(s_star + sign * mid) - peak > -_TAIL_DEPTH
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return s_star + sign * hi

    a, b = bracket(-1.0), bracket(1.0)
    width = b - a
    n = 16
    nodes = np.linspace(0.0, 1.0, n + 1)
    vals = np.exp(phi(a[:, None] + width[:, None] * nodes[None, :]) - peak[:, None])
    total = vals[:, 1:-1].sum(axis=1) + 0.5 * (vals[:, 0] + vals[:, -1])
    estimate = total * width / n
    for _ in range(14):
        mids = (np.arange(n) + 0.5) / n
        total = total + np.exp(phi(a[:, None] + width[:, None] * mids[None, :]) - peak[:, None]).sum(axis=1)
        n *= 2
        new = total * width / n
        converged = np.all(np.abs(new - estimate) <= 1e-15 * np.abs(new))
        estimate = new
        if converged:
            break
    else:
        raise ToleranceError(f"K_{nu} trapezoid did not converge", achieved=float(np.max(np.abs(new - estimate))))
    return 0.5 * estimate * np.exp(log_scale)


def bessel_k(nu, r, scaled: bool = False):
    """Macdonald function K_nu(r) for real order and positive argument.

    Vectorized over ``r``.  With ``scaled=True`` returns exp(r) * K_nu(r),
    which stays representable for large arguments.
    """
    nu = abs(float(nu))
    r_arr = np.asarray(r, dtype=float)
    if r_arr.size == 0:
        return r_arr.copy()
    if not np.all(r_arr > 0):
        raise DomainError("bessel_k requires r > 0")
    flat = r_arr.ravel()
    out = np.empty_like(flat)
    if _half_integer_order(nu):
        out[:] = _k_half_integer(nu, flat, scaled)
    else:
        big = flat > max(_ASYMPTOTIC_SEAM, nu * nu)
        if big.any():
            out[big] = _k_asymptotic(nu, flat[big], scaled)
        small = np.flatnonzero(~big)
        for start in range(0, small.size, _CHUNK):
            idx = small[start:start + _CHUNK]
            out[idx] = _k_trapezoid(nu, flat[idx], scaled)
    out = out.reshape(r_arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# incomplete gamma and error function


def _gamma_pq(a, x):
    """Return (P, Q) with P + Q = 1; the smaller one is computed directly."""
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    log_front = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(10000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        p = min(1.0, total * math.exp(log_front))
        return p, 1.0 - p
    # modified Lentz continued fraction for Q
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    dd = 1.0 / b
    h = dd
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < tiny:
            dd = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = min(1.0, math.exp(log_front) * h)
    return 1.0 - q, q


def _check_gamma_args(a, x):
    if not a > 0:
        raise DomainError("reg_inc_gamma requires a > 0")
    if not x >= 0:
        raise DomainError("reg_inc_gamma requires x >= 0")


def reg_inc_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a)."""
    if np.ndim(a) == 0 and np.ndim(x) == 0:
        _check_gamma_args(float(a), float(x))
        return _gamma_pq(float(a), float(x))[0]
    a_b, x_b = np.broadcast_arrays(np.asarray(a, float), np.asarray(x, float))
    out = np.empty(a_b.shape)
    for idx in np.ndindex(a_b.shape):
        _check_gamma_args(a_b[idx], x_b[idx])
        out[idx] = _gamma_pq(a_b[idx], x_b[idx])[0]
    return out


def reg_inc_gamma_upper(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check_gamma_args(float(a), float(x))
    return _gamma_pq(float(a), float(x))[1]


def erf(x):
    x = float(x)
    p = _gamma_pq(0.5, x * x)[0]
    return math.copysign(p, x)


def erfc(x):
    x = float(x)
    if x >= 0:
        return _gamma_pq(0.5, x * x)[1]
    return 1.0 + _gamma_pq(0.5, x * x)[0]
