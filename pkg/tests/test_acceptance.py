"""Acceptance criteria, each run at its stated scale and tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are repeated in a
summary section at the end of the pytest run.  Monte Carlo runs shared by
several criteria are cached per module.
"""

import math
import os
import time

import numpy as np
import pytest

from grenlab.hull import evaluate_envelope, left_slope, upper_concave_majorant
from grenlab.monotone import BIWEIGHT, bandwidth_holder, BandwidthRule, grenander, pava_decreasing, smoothed_grenander
from grenlab.ratelab import (
    ExperimentPlan,
    build_replication,
    default_model,
    fit_log_rate,
    localization_probability,
    replication_seed,
    run_experiment,
    summarize,
)

from .oracles import brute_upper_hull, exact_interp

WORKERS = os.cpu_count() or 1
N_GRID = tuple(2**k for k in range(10, 18))
REPS = 200
SEED = 20240611

pytestmark = pytest.mark.slow


def _rate_run(variant, statistics, reps=REPS, n_grid=N_GRID, **plan_kw):
    plan = ExperimentPlan(default_model(variant), n_grid=n_grid, reps=reps, seed=SEED,
                          statistic=statistics[0], **plan_kw)
    rows, checks = run_experiment(plan, statistics=statistics, workers=WORKERS, checks=True)
    by_stat = {s: [r for r in rows if r.statistic == s] for s in statistics}
    return plan, by_stat, checks


@pytest.fixture(scope="module")
def density_run():
    return _rate_run("density", ("global", "local", "pointwise"))


@pytest.fixture(scope="module")
def regression_run():
    return _rate_run("regression", ("global",))


@pytest.fixture(scope="module")
def censoring_run():
    return _rate_run("censoring", ("global",))


@pytest.fixture(scope="module")
def primitive_run():
    return _rate_run("primitive", ("global",))


def _slope_line(fit):
    return f"slope={fit.slope:.4f} (se {fit.stderr:.4f}) R2={fit.r2:.4f} n={fit.n_min}..{fit.n_max} reps={fit.reps}"


# 1 -------------------------------------------------------------------------


def test_c01_hull_oracle_equivalence(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        x = np.unique(rng.random(n))
        y = rng.random(x.size)
        env = upper_concave_majorant(x, y)
        idx = brute_upper_hull(x.tolist(), y.tolist())
        same_vertices = env.x.tolist() == x[idx].tolist() and env.y.tolist() == y[idx].tolist()
        same_values = all(
            exact_interp(env.x, env.y, t) == exact_interp(x[idx], y[idx], t) for t in x
        ) and np.array_equal(evaluate_envelope(env, x), np.interp(x, x[idx], y[idx]))
        bad += not (same_vertices and same_values)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    verdict(1, ok, f"1000 point sets, {bad} disagreements, {elapsed:.1f}s (limit 60s)")
    assert ok


# 2 -------------------------------------------------------------------------


def test_c02_pava_hull_equivalence(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 101))
        v, w = rng.standard_normal(n), rng.uniform(0.01, 5.0, n)
        cw = np.concatenate(([0.0], np.cumsum(w)))
        cs = np.concatenate(([0.0], np.cumsum(v * w)))
        slopes = left_slope(upper_concave_majorant(cw, cs), cw[1:])
        worst = max(worst, float(np.max(np.abs(pava_decreasing(v, w) - slopes))))
    ok = worst <= 1e-10
    verdict(2, ok, f"500 instances, max |PAVA - hull slope| = {worst:.2e} (tol 1e-10)")
    assert ok


# 3, 4, 5 -------------------------------------------------------------------


def test_c03_global_rate_density(density_run, verdict):
    _, rows, _ = density_run
    fit = fit_log_rate(rows["global"], "lognlogn")
    ok = 0.55 <= fit.slope <= 0.80 and fit.r2 >= 0.95
    verdict(3, ok, f"density global: {_slope_line(fit)}; band [0.55, 0.80], R2 >= 0.95")
    assert ok


def test_c04_global_rate_regression_censoring(regression_run, censoring_run, verdict):
    fits = {
        "regression": fit_log_rate(regression_run[1]["global"], "lognlogn"),
        "censoring": fit_log_rate(censoring_run[1]["global"], "lognlogn"),
    }
    ok = all(0.55 <= f.slope <= 0.80 and f.r2 >= 0.95 for f in fits.values())
    detail = "; ".join(f"{k}: {_slope_line(f)}" for k, f in fits.items())
    verdict(4, ok, f"{detail}; band [0.55, 0.80]")
    assert ok


def test_c05_global_rate_integrated_process(primitive_run, verdict):
    _, rows, _ = primitive_run
    fit = fit_log_rate(rows["global"], "lognlogn")
    ok = 0.85 <= fit.slope <= 1.15
    verdict(5, ok, f"integrated process global: {_slope_line(fit)}; band [0.85, 1.15]")
    assert ok


# 6 -------------------------------------------------------------------------


def test_c06_pointwise_no_log_factor(density_run, verdict):
    _, rows, _ = density_run
    ns, med, _ = summarize([r for r in rows["pointwise"] if r.n >= 2**12])
    scaled = med * ns ** (2 / 3)
    ratio = float(scaled.max() / scaled.min())
    ok = ratio <= 2.0
    verdict(6, ok, f"median n^(2/3) gap at x0=0.5 over n=2^12..2^17: "
                   f"{np.array2string(scaled, precision=3)}; max/min = {ratio:.3f} (limit 2)")
    assert ok


# 7 -------------------------------------------------------------------------


def test_c07_local_nesting_and_scaling(density_run, verdict):
    plan, rows, _ = density_run
    key = lambda r: (r.n, r.rep)
    g = {key(r): r.value for r in rows["global"]}
    loc = {key(r): r.value for r in rows["local"]}
    pw = {key(r): r.value for r in rows["pointwise"]}
    violations = sum(not (pw[k] <= loc[k] <= g[k]) for k in g)
    ns, med, _ = summarize(rows["local"])
    eps = np.array([plan.epsilon(n) for n in ns])
    scaled = med * np.sqrt(ns) / np.sqrt(eps)
    ratio = float(scaled.max() / scaled.min())
    ok = violations == 0 and ratio <= 3.0
    verdict(7, ok, f"{violations} nesting violations in {len(g)} replications; median local gap "
                   f"x n^(1/2) eps^(-1/2): {np.array2string(scaled, precision=3)}; "
                   f"max/min = {ratio:.3f} (limit 3)")
    assert ok


# 8 -------------------------------------------------------------------------


def test_c08_localization(verdict):
    est = {}
    for c0 in (1.0, 5.0, 50.0):
        plan = ExperimentPlan(default_model("density"), n_grid=(10_000,), reps=500, seed=SEED,
                              statistic="localization", c0=c0)
        est[c0] = localization_probability(plan, 10_000, workers=WORKERS)
    cs = sorted(est)
    monotone = all(
        est[hi][0] <= est[lo][0] + 2 * math.hypot(est[lo][1], est[hi][1])
        for lo, hi in zip(cs, cs[1:])
    )
    ok = est[50.0][0] <= 0.05 and monotone
    detail = ", ".join(f"c0={c:g}: {p:.3f} (se {s:.3f})" for c, (p, s) in est.items())
    verdict(8, ok, f"n=10^4, 500 reps: {detail}; need p(50) <= 0.05 and non-increasing within 2 se")
    assert ok


# 9 -------------------------------------------------------------------------


def test_c09_marshall(density_run, regression_run, censoring_run, primitive_run, verdict):
    total = violations = undominated = 0
    for run in (density_run, regression_run, censoring_run, primitive_run):
        for chk in run[2].values():
            total += 1
            violations += not (chk.marshall_lhs <= chk.marshall_rhs)
            undominated += not chk.dominated
    ok = violations == 0 and undominated == 0
    verdict(9, ok, f"{total} replications of criteria 3-5: {violations} Marshall violations, "
                   f"{undominated} domination failures")
    assert ok


# 10 ------------------------------------------------------------------------


def test_c10_smoothed_monotone(verdict):
    spec = default_model("density")
    n = 4096
    h = bandwidth_holder(BandwidthRule(2.0, 1.0), n)
    grid = np.linspace(0.0, 1.0, 2048)
    assert np.sum(grid < h) > 0 and np.sum(grid > 1 - h) > 0
    violations = 0
    for rep in range(100):
        r = build_replication(spec, n, replication_seed(SEED, n, rep))
        f = smoothed_grenander(grenander(r.source), BIWEIGHT, h, grid)
        violations += int(np.sum(np.diff(f) > 0))
    ok = violations == 0
    verdict(10, ok, f"100 replications, n=4096, h={h:.4f}, 2048-point grid: {violations} increases")
    assert ok


# 11 ------------------------------------------------------------------------


def test_c11_first_order_equivalence(verdict):
    ns = (2**10, 2**12, 2**14)
    parts, ok = [], True
    for order in (0, 1):
        _, rows, _ = _rate_run("density", ("smoothing",), n_grid=ns, derivative_order=order,
                               grid_size=2048)
        n_arr, med, _ = summarize(rows["smoothing"])
        h = np.array([bandwidth_holder(BandwidthRule(2.0, 1.0), n) for n in n_arr])
        scaled = med * h ** (1 + order) * n_arr ** (2 / 3) * np.log(n_arr) ** (-2 / 3)
        ratio = float(scaled.max() / scaled.min())
        ok &= ratio <= 3.0
        parts.append(f"l={order}: {np.array2string(scaled, precision=3)} max/min {ratio:.2f}")
    verdict(11, ok, f"scaled median discrepancy over n=2^10,2^12,2^14 ({REPS} reps): "
                    + "; ".join(parts) + " (limit 3)")
    assert ok


# 12 ------------------------------------------------------------------------


def test_c12_moment_scaling(verdict):
    _, rows, _ = _rate_run("surrogate", ("moment",), moment_order=2.0)
    fit = fit_log_rate(rows["moment"], "lognlogn")
    ok = 1.10 <= fit.slope <= 1.60
    verdict(12, ok, f"surrogate bridge, mean gap^2: {_slope_line(fit)}; band [1.10, 1.60]")
    assert ok
