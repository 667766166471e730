"""Constant-free comparison functions of the two-sided estimates.

Each function returns h(inputs) such that the measured quantity q satisfies
c1 * h <= q <= c2 * h on the stated regime for unspecified constants.  The
constants are measured by ``verify``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, RegimeError, SingularityError
from .kernels import Domain, as_points, bessel_k, green_gauss
from .subordinator import ProcessParams


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _lin_or_power(z, alpha):
    """z v z^{alpha/2}: linear above one, power alpha/2 below."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, z ** (alpha / 2))


# ---------------------------------------------------------------------------


def env_green1(x, y, params: ProcessParams):
    """Comparison function for the 1-Green function of the half-space."""
    d, alpha = params.d, params.alpha
    xp, yp = np.broadcast_arrays(as_points(x, d), as_points(y, d))
    if np.any(xp[..., -1] <= 0) or np.any(yp[..., -1] <= 0):
        raise DomainError("points must lie in the half-space")
    r = np.linalg.norm(xp - yp, axis=-1)
    if np.any(r == 0):
        raise SingularityError("envelope undefined on the diagonal")
    low = np.minimum(1.0, np.minimum(xp[..., -1], yp[..., -1]))
    if alpha < d:
        nu = (d - alpha) / 2
        radial = bessel_k(nu, r) / r ** nu
        return _out(radial * np.minimum((low / np.minimum(r, 1.0)) ** (alpha / 2), 1.0))
    if d != 1:
        raise RegimeError("no envelope for alpha >= d beyond d = 1")
    far = r >= low
    with np.errstate(divide="ignore", invalid="ignore"):
        far_val = np.exp(-r) * r ** (alpha / 2 - 1) * low ** (alpha / 2)
        if alpha == 1.0:
            near_val = np.log(2 * low / r)
        else:
            near_val = low ** (alpha - 1) * np.ones_like(r)
    return _out(np.where(far, far_val, near_val))


def env_green_halfline(x, y, params: ProcessParams):
    """G^1 envelope plus (x ^ y) v (x ^ y)^{alpha/2} on the half-line."""
    p1 = params if params.d == 1 else params.with_(d=1)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("points must be positive")
    low = np.minimum(x, y)
    return _out(env_green1(x, y, p1) + _lin_or_power(low, params.alpha))


def env_green_halfline_piecewise(x, y, params: ProcessParams):
    """Equivalent three-case form of the half-line envelope (x <= y)."""
    x, y = np.minimum(x, y), np.maximum(x, y)
    p1 = params if params.d == 1 else params.with_(d=1)
    g1 = env_green1(x, y, p1)
    near = np.abs(x - y) < 1
    return _out(np.where(near & (x <= 1), g1,
                         np.where(near, g1 + x, _lin_or_power(x, params.alpha))))


def env_tail_halfspace(x_d, t, params: ProcessParams):
    """Survival envelope ((x^{alpha/2} v x) / sqrt(t)) ^ 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise RegimeError("tail envelope applies for t >= 1")
    x_d = np.asarray(x_d, dtype=float)
    if np.any(x_d <= 0):
        raise DomainError("x_d must be positive")
    return _out(np.minimum(_lin_or_power(x_d, params.alpha) / np.sqrt(t), 1.0))


def env_exit_interval(x, R, params: ProcessParams):
    """Mean exit time envelope for (0, R)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x >= R):
        raise DomainError("x must lie in (0, R)")
    return _out(_lin_or_power(x, params.alpha) * _lin_or_power(R - x, params.alpha))


def env_exit_ball(x, R, params: ProcessParams):
    """Mean exit time envelope for the ball B(0, R)."""
    r = np.linalg.norm(as_points(x, params.d), axis=-1)
    if np.any(r >= R):
        raise DomainError("x must lie in the ball")
    return _out(_lin_or_power(R - r, params.alpha) * max(R, R ** (params.alpha / 2)))


def env_escape_prob(x, R, params: ProcessParams):
    """Envelope of the probability of leaving (0, R) before leaving (0, inf)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x >= R):
        raise DomainError("x must lie in (0, R)")
    return _out(_lin_or_power(x, params.alpha) / max(R, R ** (params.alpha / 2)))


def env_green_halfspace(x, y, params: ProcessParams):
    """Green function envelope for the half-space, d >= 2."""
    d, alpha = params.d, params.alpha
    if d < 2:
        raise RegimeError("half-space envelope is stated for d >= 2")
    xp, yp = np.broadcast_arrays(as_points(x, d), as_points(y, d))
    if np.any(xp[..., -1] <= 0) or np.any(yp[..., -1] <= 0):
        raise DomainError("points must lie in the half-space")
    r = np.linalg.norm(xp - yp, axis=-1)
    if np.any(r == 0):
        raise SingularityError("envelope undefined on the diagonal")
    xd, yd = xp[..., -1], yp[..., -1]
    near = np.minimum((np.minimum(xd, yd) / r) ** (alpha / 2), 1.0) * r ** (alpha - d)
    spread = _lin_or_power(xd, alpha) * _lin_or_power(yd, alpha)
    if d == 2:
        far = np.log1p(4 * spread / r ** 2)
        near = near + np.log(np.maximum(1.0, np.minimum(xd, yd)))
    else:
        far = np.minimum(spread / r ** d, r ** (2.0 - d))
    return _out(np.where(r > 3, far, near))


def env_green_interval(x, y, R, params: ProcessParams):
    """Green function envelope for (0, R), R >= 4."""
    if R < 4:
        raise RegimeError("interval envelope applies for R >= 4; use the stable comparison below")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or np.any(x >= R) or np.any(y >= R):
        raise DomainError("points must lie in (0, R)")
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    alpha = params.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.minimum(env_green_halfline(lo, hi, params), env_green_halfline(R - lo, R - hi, params))
    far = _lin_or_power(lo, alpha) * _lin_or_power(R - hi, alpha) / R
    return _out(np.where(hi - lo <= 1, near, far))


def env_green_stable_interval(x, y, R, params: ProcessParams):
    """Two-sided estimate of the stable Green function of (0, R)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or np.any(x >= R) or np.any(y >= R):
        raise DomainError("points must lie in (0, R)")
    alpha = params.alpha
    prod = np.minimum(x, R - x) * np.minimum(y, R - y)
    r = np.abs(x - y)
    with np.errstate(divide="ignore"):
        if alpha < 1:
            val = np.minimum(r ** (alpha - 1), prod ** (alpha / 2) / r)
        elif alpha == 1:
            val = np.log1p(np.sqrt(prod) / r)
        else:
            val = np.minimum(prod ** ((alpha - 1) / 2), prod ** (alpha / 2) / r)
    if np.any(~np.isfinite(val)):
        raise SingularityError("stable interval envelope diverges on the diagonal")
    return _out(val)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class EnvelopeBand:
    """A named comparison function together with the regime it covers."""

    name: str
    h: Callable
    regime: Callable
    citation: str

    def __call__(self, *args, **kwargs):
        return self.h(*args, **kwargs)


def _halfspace_regime(x, y, params, **_):
    xp, yp = as_points(x, params.d), as_points(y, params.d)
    return bool(xp[-1] > 0 and yp[-1] > 0 and np.any(xp != yp))


def _gauss_regime(x, y, params, **_):
    xp, yp = as_points(x, params.d), as_points(y, params.d)
    return bool(xp[-1] >= 1 and yp[-1] >= 1 and np.linalg.norm(xp - yp) > 2)


ENVELOPES = {
    "green1": EnvelopeBand(
        "green1", env_green1, _halfspace_regime,
        "1-Green function of the half-space: Macdonald-function envelope "
        "(log or power near the diagonal when d = 1 and alpha >= 1)"),
    "halfline-green": EnvelopeBand(
        "halfline-green", env_green_halfline,
        lambda x, y, params, **_: x > 0 and y > 0 and x != y,
        "Green function of (0, inf): G^1 + (x ^ y) v (x ^ y)^{alpha/2}"),
    "tail": EnvelopeBand(
        "tail", env_tail_halfspace,
        lambda x, t, params, **_: x > 0 and t >= 1,
        "survival in the half-space: P(tau > t) ~ ((x^{alpha/2} v x) / t^{1/2}) ^ 1, t >= 1"),
    "exit-interval": EnvelopeBand(
        "exit-interval", env_exit_interval,
        lambda x, R, params, **_: 0 < x < R,
        "mean exit time of (0, R): (x^{alpha/2} v x)((R-x)^{alpha/2} v (R-x))"),
    "exit-ball": EnvelopeBand(
        "exit-ball", env_exit_ball,
        lambda x, R, params, **_: float(np.linalg.norm(as_points(x, params.d))) < R,
        "mean exit time of B(0, R): ((R-|x|)^{alpha/2} v (R-|x|))(R v R^{alpha/2})"),
    "escape": EnvelopeBand(
        "escape", env_escape_prob,
        lambda x, R, params, **_: 0 < x < R,
        "P(leave (0, R) before (0, inf)) ~ (x^{alpha/2} v x) / (R^{alpha/2} v R)"),
    "halfspace-green": EnvelopeBand(
        "halfspace-green", env_green_halfspace, _halfspace_regime,
        "Green function of the half-space, d >= 2: near-diagonal and far regimes split at |x-y| = 3"),
    "halfspace-gauss": EnvelopeBand(
        "halfspace-gauss", lambda x, y, params: green_gauss(Domain.halfspace(params.d), x, y), _gauss_regime,
        "Green function of the half-space comparable to the Brownian one for x_d, y_d >= 1, |x-y| > 2"),
    "interval-green": EnvelopeBand(
        "interval-green", env_green_interval,
        lambda x, y, R, params, **_: R >= 4 and 0 < x < R and 0 < y < R and x != y,
        "Green function of (0, R), R >= 4: half-line envelopes near the diagonal, "
        "(x^{alpha/2} v x)((R-y)^{alpha/2} v (R-y)) / R otherwise"),
}
