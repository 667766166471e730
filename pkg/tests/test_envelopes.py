import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relpot.envelopes import (ENVELOPES, env_escape_prob, env_exit_ball, env_exit_interval, env_green1,
                              env_green_halfline, env_green_halfline_piecewise, env_green_halfspace,
                              env_green_interval, env_green_stable_interval, env_tail_halfspace)
from relpot.errors import DomainError, RegimeError, SingularityError
from relpot.kernels import Domain, green_gauss
from relpot.special_fns import bessel_k
from relpot.subordinator import ProcessParams

A1 = ProcessParams(1.0, 1.0, 1)
alphas = st.sampled_from([0.5, 1.0, 1.5])
pos = st.floats(0.01, 50.0)


def test_green1_far_regime():
    val = env_green1(2.0, 4.0, ProcessParams(1.5, 1.0, 1))
    assert abs(val - math.exp(-2) * 2 ** -0.25) < 1e-14
    assert abs(val - 0.1138) < 1e-4


def test_green1_log_regime():
    assert env_green1(2.0, 2.5, A1) == pytest.approx(math.log(4))


def test_green1_alpha_below_d():
    val = env_green1([0, 0, 0.1], [0, 0, 0.3], ProcessParams(1.0, 1.0, 3))
    assert val == pytest.approx(bessel_k(1.0, 0.2) / 0.2 * math.sqrt(0.5), rel=1e-14)


def test_green1_regime_errors():
    with pytest.raises(SingularityError):
        env_green1(1.0, 1.0, A1)
    with pytest.raises(DomainError):
        env_green1(-1.0, 1.0, A1)


def test_halfline_additive_term():
    # far apart the G^1 part is negligible
    assert env_green_halfline(4.0, 60.0, A1) == pytest.approx(4.0, rel=1e-12)
    assert env_green_halfline(0.25, 60.0, A1) == pytest.approx(0.5, rel=1e-12)


def test_halfline_piecewise_example():
    assert env_green_halfline_piecewise(0.09, 1.5, A1) == pytest.approx(0.3)


@given(st.floats(0.01, 20), st.floats(0.01, 20), alphas)
def test_halfline_forms_comparable(x, y, alpha):
    if abs(x - y) < 1e-6:
        return
    p = ProcessParams(alpha, 1.0, 1)
    ratio = env_green_halfline(x, y, p) / env_green_halfline_piecewise(x, y, p)
    assert 0.1 < ratio < 10


def test_tail_examples():
    for alpha in (0.5, 1.0, 1.5):
        assert env_tail_halfspace(4.0, 64.0, ProcessParams(alpha)) == 0.5
        assert env_tail_halfspace(1e6, 4.0, ProcessParams(alpha)) == 1.0
    assert env_tail_halfspace(0.25, 1.0, A1) == 0.5
    with pytest.raises(RegimeError):
        env_tail_halfspace(1.0, 0.5, A1)


@given(pos, st.floats(1.0, 1e4), st.floats(1.0, 1e4), alphas)
def test_tail_monotone(x, t1, t2, alpha):
    p = ProcessParams(alpha)
    lo, hi = sorted((t1, t2))
    assert env_tail_halfspace(x, hi, p) <= env_tail_halfspace(x, lo, p)
    assert env_tail_halfspace(x, lo, p) <= env_tail_halfspace(2 * x, lo, p)


def test_exit_interval_examples():
    assert env_exit_interval(1.0, 2.0, A1) == 1.0
    assert env_exit_interval(0.25, 10.0, A1) == pytest.approx(4.875)
    with pytest.raises(DomainError):
        env_exit_interval(3.0, 2.0, A1)


@given(st.floats(0.01, 0.99), st.floats(0.1, 100), alphas)
def test_exit_interval_symmetric(frac, R, alpha):
    p = ProcessParams(alpha)
    x = frac * R
    assert env_exit_interval(x, R, p) == pytest.approx(env_exit_interval(R - x, R, p), rel=1e-12)


def test_exit_ball_examples():
    assert env_exit_ball([0.0, 0.0], 1.0, ProcessParams(1.0, 1.0, 2)) == 1.0
    assert env_exit_ball([3.0, 0.0], 4.0, ProcessParams(1.5, 1.0, 2)) == pytest.approx(4.0)
    assert env_exit_ball([8.99, 0.0], 9.0, ProcessParams(1.0, 1.0, 2)) == pytest.approx(0.9)


def test_escape_examples():
    for alpha in (0.5, 1.0, 1.5):
        assert env_escape_prob(2.0, 4.0, ProcessParams(alpha)) == 0.5
    assert env_escape_prob(0.04, 0.5, A1) == pytest.approx(0.2 / math.sqrt(0.5))


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.1, 100), alphas)
def test_escape_monotone(f1, f2, R, alpha):
    p = ProcessParams(alpha)
    lo, hi = sorted((f1, f2))
    assert env_escape_prob(lo * R, R, p) <= env_escape_prob(hi * R, R, p)


def test_halfspace_examples():
    p3 = ProcessParams(1.0, 1.0, 3)
    assert env_green_halfspace([0, 0, 10], [5, 0, 10], p3) == pytest.approx(0.2)
    assert env_green_halfspace([0, 0, 0.25], [1, 0, 0.25], p3) == pytest.approx(0.5)
    assert env_green_halfspace([0, 1.0], [10, 1.0], ProcessParams(1.0, 1.0, 2)) == pytest.approx(math.log(1.04))
    with pytest.raises(RegimeError):
        env_green_halfspace(1.0, 2.0, A1)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_halfspace_seam_factor(d, alpha):
    # the two branches at |x - y| = 3 differ by a bounded factor
    p = ProcessParams(alpha, 1.0, d)
    worst = 1.0
    for xd in np.geomspace(0.01, 20, 12):
        for yd in np.geomspace(0.01, 20, 12):
            x = np.zeros(d)
            x[-1] = xd
            y = np.zeros(d)
            y[-1] = yd
            dz = abs(xd - yd)
            if dz >= 3:
                continue
            y[0] = math.sqrt(9 - dz * dz)
            inner = env_green_halfspace(x, y * np.array([1 - 1e-9] + [1] * (d - 1)), p)
            outer = env_green_halfspace(x, y * np.array([1 + 1e-9] + [1] * (d - 1)), p)
            worst = max(worst, inner / outer, outer / inner)
    assert worst < 100


def test_halfspace_gauss_registry_uses_brownian_green():
    x, y = [0, 0, 2.0], [3, 0, 2.0]
    val = ENVELOPES["halfspace-gauss"](x, y, ProcessParams(1.0, 1.0, 3))
    assert val == green_gauss(Domain.halfspace(3), x, y)


def test_interval_examples():
    assert env_green_interval(1.0, 5.0, 8.0, A1) == pytest.approx(0.375)
    # the formula gives sqrt(0.1); a listed 0.00625 uses (R - y) instead of (R - y)^{1/2}
    assert env_green_interval(0.25, 7.9, 8.0, A1) == pytest.approx(0.5 * math.sqrt(0.1) / 8)
    assert env_green_interval(0.25, 7.9, 8.0, A1) == pytest.approx(0.019764, abs=1e-6)
    with pytest.raises(RegimeError):
        env_green_interval(1.0, 2.0, 3.0, A1)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(4, 100), alphas)
def test_interval_reflection(f1, f2, R, alpha):
    p = ProcessParams(alpha)
    x, y = f1 * R, f2 * R
    if abs(x - y) < 1e-6:
        return
    assert env_green_interval(x, y, R, p) == pytest.approx(env_green_interval(R - y, R - x, R, p), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_interval_large_R_limit(alpha):
    p = ProcessParams(alpha)
    R = 1e4
    for x in (0.5, 2.0, 7.0):
        for y in (0.3, 1.5, 9.0):
            if x == y:
                continue
            assert abs(env_green_interval(x, y, R, p) / env_green_halfline(x, y, p) - 1) < 0.05 or \
                abs(x - y) > 1


def test_stable_interval_examples():
    assert env_green_stable_interval(1.0, 2.0, 4.0, A1) == pytest.approx(math.log(1 + math.sqrt(2)))
    assert env_green_stable_interval(1.0, 2.0, 4.0, ProcessParams(0.5)) == pytest.approx(1.0)
    near = env_green_stable_interval(2.0, 2.0 + 1e-9, 4.0, ProcessParams(1.5))
    assert near == pytest.approx(math.sqrt(2), rel=1e-6)
    with pytest.raises(SingularityError):
        env_green_stable_interval(2.0, 2.0, 4.0, A1)


@given(pos, pos, alphas)
def test_envelopes_positive(x, y, alpha):
    p = ProcessParams(alpha, 1.0, 1)
    if abs(x - y) < 1e-9:
        return
    assert env_green_halfline(x, y, p) > 0
    assert env_tail_halfspace(x, 1.0 + y, p) > 0


def test_registry_complete():
    assert set(ENVELOPES) == {"green1", "halfline-green", "tail", "exit-interval", "exit-ball", "escape",
                              "halfspace-green", "halfspace-gauss", "interval-green"}
    for band in ENVELOPES.values():
        assert band.citation and callable(band.h)
