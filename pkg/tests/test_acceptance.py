"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints
(see conftest.py). Run ``python3 tests/test_acceptance.py`` to get the
same lines without pytest's output.
"""
import math
import time

import numpy as np
import pytest

from mrwvol.estimation import VariogramEstimate, block_ranges, fit_loglinear, variogram_of_logs
from mrwvol.forecast import VolHistory, exact_weights_oracle, forecast_sensitivity, forecast_vol, weight_row
from mrwvol.kernels import (
    arcsine_log_potential,
    compute_pred_constant,
    kernel_mass,
    phi_log_potential,
    predict,
    _constants_cache,
)
from mrwvol.pricing import kurtosis_finite_T, kurtosis_limit
from mrwvol.simulation import MrwParams, rescale_to_T, simulate_path, simulate_returns

from oracles import conditional_expectation

RESULTS: list[str] = []


def report(number, passed, detail, elapsed):
    line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}  [{elapsed:.2f}s]"
    RESULTS.append(line)
    print(line)
    assert passed, line


def test_criterion_01_arcsine_log_identity():
    start = time.perf_counter()
    ts = np.linspace(0.1, 1.9, 10)
    err = max(abs(arcsine_log_potential(t) + math.pi * math.log(2)) for t in ts)
    elapsed = time.perf_counter() - start
    report(1, err <= 1e-6 and elapsed < 1.0, f"max |error| = {err:.2e} over 10 points", elapsed)


def test_criterion_02_phi_log_potential():
    start = time.perf_counter()
    ts = np.linspace(-0.975, -0.025, 20)
    err = max(abs(phi_log_potential(t) - 1.0) for t in ts)
    elapsed = time.perf_counter() - start
    report(2, err <= 1e-4, f"max |error| = {err:.2e} over 20 points", elapsed)


def test_criterion_03_prediction_constant():
    _constants_cache.clear()
    start = time.perf_counter()
    c = compute_pred_constant().c_pred
    elapsed = time.perf_counter() - start
    ok = abs(c - 1.33) <= 0.02 and elapsed < 30
    report(3, ok, f"C = {c:.7f}, target 1.33 +/- 0.02 (2 ln 2 = {2 * math.log(2):.7f})", elapsed)


def test_criterion_04_kernel_normalization():
    start = time.perf_counter()
    L = 1.0
    errs = [abs(kernel_mass(t) - 1) for t in (0.01 * L, 0.1 * L, L)]
    errs += [abs(kernel_mass(t, L) - 1) for t in (0.01 * L, 0.1 * L, L)]
    elapsed = time.perf_counter() - start
    report(4, max(errs) <= 1e-8, f"max |mass - 1| = {max(errs):.2e}", elapsed)


def test_criterion_05_discrete_conditioning_oracle():
    start = time.perf_counter()
    L = 1.0
    T = 100 * 2 * L
    fs = {
        "1": lambda s: np.ones_like(s),
        "s": lambda s: s,
        "sin": lambda s: np.sin(np.pi * s / (2 * L)),
    }
    worst = 0.0
    for t in (0.1 * L, 0.5 * L):
        for f in fs.values():
            ref = conditional_expectation(t, f, L, T, n_cells=2000)
            got = predict(t, lambda s: float(f(np.float64(s))), L, T)
            worst = max(worst, abs(got - ref) / abs(ref))
    elapsed = time.perf_counter() - start
    report(5, worst <= 0.02 and elapsed < 120, f"max relative error = {worst:.2e}", elapsed)


def test_criterion_06_forecast_weight_regime():
    start = time.perf_counter()
    p = MrwParams(1.0, 0.02, 1e5, 1.0)
    dists = []
    for n in range(1, 6):
        exact = exact_weights_oracle(n, 1000, p)
        approx = weight_row(n, 1000).weights
        dists.append(np.abs(approx - exact).sum() / np.abs(exact).sum())
    elapsed = time.perf_counter() - start
    detail = "relative L1 for n=1..5: " + ", ".join(f"{d:.3f}" for d in dists)
    report(6, max(dists) <= 0.10, detail, elapsed)


def test_criterion_07_lambda_recovery():
    start = time.perf_counter()
    days, sub = 6 * 252, 16
    p = MrwParams(1.0, 0.02, 2048.0, 1 / sub)
    y = np.cumsum(simulate_returns(p, days * sub, 200, seed=7), axis=1)
    log_r = np.log(block_ranges(y, sub))
    lags, values, counts = variogram_of_logs(log_r, 50)
    fits = [fit_loglinear(VariogramEstimate(lags, v, counts)) for v in values]
    lam = np.array([f.lambda2_hat for f in fits])
    icpt = np.array([f.intercept_hat for f in fits])
    frac = np.mean((lam >= 0.01) & (lam <= 0.03))
    elapsed = time.perf_counter() - start
    ok = frac >= 0.85 and abs(icpt.mean() - 0.29) <= 0.05 and elapsed < 600
    report(7, ok, f"{frac:.1%} of paths in [0.01, 0.03], mean intercept {icpt.mean():.4f}", elapsed)


def test_criterion_08_rescale_moment():
    start = time.perf_counter()
    p = MrwParams(1.0, 0.02, 64.0, 1.0)
    before = np.empty(10_000)
    after = np.empty(10_000)
    for i in range(before.size):
        path = simulate_path(p, 64, seed=i)
        before[i] = np.mean(path.returns**2)
        after[i] = np.mean(rescale_to_T(path, 512.0, seed=i).path.returns**2)
    d = after - before
    se = d.std(ddof=1) / math.sqrt(d.size)
    elapsed = time.perf_counter() - start
    detail = f"E[r^2] before {before.mean():.4f}, after {after.mean():.4f}, diff {d.mean():+.4f} (SE {se:.4f})"
    report(8, abs(d.mean()) <= 3 * se, detail, elapsed)


def test_criterion_09_sensitivity():
    start = time.perf_counter()
    c = compute_pred_constant()
    rng = np.random.default_rng(3)
    h = VolHistory(np.exp(0.2 * rng.standard_normal(1001)))
    worst = 0.0
    for n in (1, 5, 20):
        f = forecast_vol(h, n, 0.02, c)
        step = 1e-4
        fd = (forecast_vol(h, n, 0.02 + step, c).value - forecast_vol(h, n, 0.02 - step, c).value) / (2 * step)
        worst = max(worst, abs(fd / forecast_sensitivity(f, c) - 1))
    base = forecast_vol(h, 20, 0.02, c).value
    change = forecast_vol(h, 20, 0.03, c).value / base - 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and 0.015 <= change <= 0.025
    report(9, ok, f"max FD relative error {worst:.1e}; n=20 change {change:.2%}", elapsed)


def test_criterion_10_kurtosis_consistency():
    start = time.perf_counter()
    L, lam2 = 1.0, 0.02
    t = 0.1 * 2 * L
    finite = [kurtosis_finite_T(t, L, r * 2 * L, lam2) for r in (10, 100, 1000)]
    limit = kurtosis_limit(t, L, lam2, n_samples=1_000_000, seed=0)
    vals = [k.value for k in finite]
    gaps = [abs(v - limit.value) for v in vals]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:])) and all(b > a for a, b in zip(vals, vals[1:]))
    rel_gap = gaps[-1] / limit.value
    rel_se = max(limit.stderr / limit.value, *(k.stderr / k.value for k in finite))
    elapsed = time.perf_counter() - start
    ok = monotone and rel_gap <= 0.10 and rel_se <= 0.03 and elapsed < 300
    detail = (f"kappa_T = {', '.join(f'{v:.5f}' for v in vals)}; limit {limit.value:.5f} "
              f"+/- {limit.stderr:.5f}; final gap {rel_gap:.1%}; max rel SE {rel_se:.1%}")
    report(10, ok, detail, elapsed)


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all("PASS" in r for r in RESULTS) else 1)
