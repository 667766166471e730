"""Acceptance criteria, each printing one PASS/FAIL line.

The ratio suite runs at full scale (N = 1e5 paths, dt = 0.02) and takes
most of an hour on one core.
"""
import itertools
import math
import time

import numpy as np
import pytest

from relpot.kernels import Domain, green_gauss
from relpot.special_fns import bessel_k
from relpot.subordinator import McConfig, ProcessParams, sample_increment, subordinator_laplace, theta_density
from relpot.verify import (CANONICAL, ENVELOPE_CHECKS, check_envelope, check_identity, clear_cache, report_json,
                           run_suite)

FULL = McConfig()


def emit(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")


def test_criterion_1_quadrature_identities(capsys):
    start = time.perf_counter()
    reps = {name: check_identity(name) for name in ("laplace", "normalization", "levy-reps", "green1-mass", "scaling")}
    elapsed = time.perf_counter() - start
    limits = {"laplace": 1e-6, "normalization": 1e-6, "levy-reps": 1e-8, "green1-mass": 1e-4, "scaling": 1e-8}
    sizes_ok = len(reps["laplace"].grid) == 27 and len(reps["green1-mass"].grid) == 5 * 3 * 3 \
        and len(reps["normalization"].grid) == 3 * 3 and len(reps["levy-reps"].grid) == 3
    ok = sizes_ok and elapsed < 300 and all(reps[n].max_residual < lim for n, lim in limits.items())
    emit(capsys, 1, ok, ", ".join(f"{n} {r.max_residual:.2e}" for n, r in reps.items()) + f"; {elapsed:.0f} s")
    assert ok


def test_criterion_2_closed_form_anchors(capsys):
    checks = [
        abs(bessel_k(0.5, 1.0) - math.sqrt(math.pi / 2) * math.exp(-1)) < 1e-10,
        abs(theta_density(1.0, 1.0, ProcessParams(1.0, 0.0)) - math.exp(-0.25) / (2 * math.sqrt(math.pi))) < 1e-10,
        float(green_gauss(Domain.halfline(), 2.0, 5.0)) == 2.0,
        float(green_gauss(Domain.interval(4.0), 1.0, 2.0)) == 0.5,
    ]
    ok = all(checks)
    emit(capsys, 2, ok, f"{sum(checks)}/4 anchors")
    assert ok


def test_criterion_3_sampler_fidelity(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst_z, worst_rate = 0.0, 0.0
    for alpha, m, t in itertools.product((0.5, 1.0, 1.5), (0.0, 1.0), (FULL.dt, 1.0)):
        p = ProcessParams(alpha, m, 1)
        draws, trials = sample_increment(t, p, rng, size=1_000_000, return_trials=True)
        for lam in (0.5, 1.0, 3.0):
            e = np.exp(-lam * draws)
            z = abs(e.mean() - subordinator_laplace(lam, t, p)) / (e.std(ddof=1) / math.sqrt(e.size))
            worst_z = max(worst_z, z)
        worst_rate = max(worst_rate, abs(draws.size / trials / math.exp(-m * t) - 1))
    elapsed = time.perf_counter() - start
    ok = worst_z < 4 and worst_rate < 0.01 and elapsed < 600
    emit(capsys, 3, ok, f"worst Laplace deviation {worst_z:.2f} SE, acceptance off by {worst_rate:.2%}; "
                        f"{elapsed:.0f} s")
    assert ok


def test_criterion_4_brownian_lower_bound(capsys):
    rep = check_identity("gauss-lower", cfg=FULL)
    cells = len(rep.grid)
    ok = rep.verdict and rep.max_residual == 0.0
    emit(capsys, 4, ok, f"{sum(r > 0 for r in rep.residuals)} of {cells} cells below the bound by more than 3 SE")
    assert ok


@pytest.fixture(scope="module")
def envelope_suite():
    clear_cache()
    start = time.perf_counter()
    reps = run_suite("envelopes", FULL)
    return reps, time.perf_counter() - start


def test_criterion_5_ratio_suites(capsys, envelope_suite):
    reps, elapsed = envelope_suite
    expected = sum(len(CANONICAL["alphas"]) * len(check.dims) for check in ENVELOPE_CHECKS.values())
    with capsys.disabled():
        for r in reps:
            print(f"  spread {r.name} alpha={r.params['alpha']:g} d={r.params['d']}: {r.spread:.3f} "
                  f"(threshold {r.threshold:g})")
    ok = len(reps) == expected and elapsed < 3600 and all(
        math.isfinite(r.spread) and r.spread <= r.threshold for r in reps)
    worst = max(reps, key=lambda r: r.spread / r.threshold)
    emit(capsys, 5, ok, f"{sum(r.verdict for r in reps)}/{len(reps)} suites within threshold, worst "
                        f"{worst.name} alpha={worst.params['alpha']:g} d={worst.params['d']} spread "
                        f"{worst.spread:.2f}; {elapsed / 60:.1f} min")
    assert ok


def test_criterion_6_ikeda_watanabe(capsys):
    rep = check_identity("ikeda-watanabe", cfg=FULL)
    ok = rep.verdict and len(rep.grid) == len(CANONICAL["alphas"])
    emit(capsys, 6, ok, "deviation / allowance per alpha: " + ", ".join(f"{r:.2f}" for r in rep.residuals))
    assert ok


def test_criterion_7_determinism(capsys, envelope_suite):
    reps, _ = envelope_suite
    first = [report_json(r) for r in reps if r.name == "tail"]
    clear_cache()
    again = [report_json(check_envelope("tail", params=ProcessParams(a, CANONICAL["mass"], 1), cfg=FULL))
             for a in CANONICAL["alphas"]]
    ident = [report_json(check_identity("ikeda-watanabe", ProcessParams(1.0, 1.0, 1), FULL)) for _ in range(2)]
    ok = first == again and ident[0] == ident[1]
    emit(capsys, 7, ok, "tail and ikeda-watanabe reruns byte-identical" if ok else "reports differ on rerun")
    assert ok
