import numpy as np
import pytest

from grenlab.errors import InputError, ModelError
from grenlab.hull import CadlagStep
from grenlab.naive import (
    GaussDriver,
    RegressionData,
    SurvivalData,
    empirical_cdf,
    gaussian_surrogate,
    nelson_aalen,
    primitive_process,
    regression_cusum,
    simulate_driver,
)
from grenlab.ratelab import linear_curve


# -- regression -------------------------------------------------------------


def test_regression_cusum_two_points():
    step = regression_cusum(RegressionData(0, 1, [0.5, 1.0], [2.0, 4.0]))
    assert step([0.0, 0.49, 0.5, 0.99, 1.0]).tolist() == [0, 0, 1, 1, 3]


def test_regression_cusum_zero_responses():
    step = regression_cusum(RegressionData(0, 1, [0.2, 0.4, 0.9], [0.0, 0.0, 0.0]))
    assert np.all(step(np.linspace(0, 1, 11)) == 0)


def test_regression_cusum_single():
    step = regression_cusum(RegressionData(0, 1, [0.5], [1.0]))
    assert step(0.49) == 0 and step(0.5) == 1


def test_regression_cusum_merges_ties_and_jump_sizes():
    t = [0.25, 0.25, 0.5, 0.75]
    y = [1.0, 3.0, -2.0, 6.0]
    step = regression_cusum(RegressionData(0, 1, t, y))
    assert step.jump_x.tolist() == [0.25, 0.5, 0.75]
    np.testing.assert_allclose(step.jump_sizes, [1.0, -0.5, 1.5])


def test_regression_cusum_design_at_a():
    step = regression_cusum(RegressionData(0, 1, [0.0, 1.0], [2.0, 2.0]))
    assert step.base == 1.0 and step(1.0) == 2.0


def test_regression_data_validation():
    with pytest.raises(InputError):
        RegressionData(0, 1, [0.5, 0.2], [1, 1])
    with pytest.raises(InputError):
        RegressionData(0, 1, [0.5, 1.2], [1, 1])
    with pytest.raises(InputError):
        RegressionData(0, 1, [0.5], [1, 1])
    with pytest.raises(InputError):
        regression_cusum(RegressionData(0, 1, [], []))


# -- density ----------------------------------------------------------------


def test_empirical_cdf_two_samples():
    step = empirical_cdf([0.5, 1.5], 0, 2)
    assert step([0.0, 0.5, 1.0, 1.5, 2.0]).tolist() == [0, 0.5, 0.5, 1, 1]


def test_empirical_cdf_sample_at_a():
    step = empirical_cdf([0.0], 0, 1)
    assert step(0.0) == 1.0


def test_empirical_cdf_ties_merge():
    step = empirical_cdf([0.3, 0.3, 0.3], 0, 1)
    assert step.jump_x.tolist() == [0.3] and step.jump_sizes.tolist() == [1.0]


def test_empirical_cdf_outside_domain():
    with pytest.raises(InputError):
        empirical_cdf([0.5, 1.5], 0, 1)


def test_empirical_cdf_mass_and_monotone():
    x = np.random.default_rng(0).random(500)
    step = empirical_cdf(x, 0, 1)
    assert step(1.0) == 1.0
    assert np.all(step.jump_sizes > 0)
    np.testing.assert_allclose(step.jump_sizes, 1 / 500)


# -- censoring --------------------------------------------------------------


def test_nelson_aalen_example():
    step = nelson_aalen(SurvivalData([1, 2, 3], [1, 1, 0], 3))
    assert step(1.0) == pytest.approx(1 / 3)
    assert step(2.0) == pytest.approx(5 / 6)
    assert step(3.0) == pytest.approx(5 / 6)
    assert step(0.5) == 0


def test_nelson_aalen_uncensored_increments():
    n = 6
    step = nelson_aalen(SurvivalData(np.arange(1, n + 1) / 10, np.ones(n, int), 1.0))
    np.testing.assert_allclose(step.jump_sizes, [1 / (n - k) for k in range(n)])


def test_nelson_aalen_single_event():
    step = nelson_aalen(SurvivalData([0.5, 0.7], [0, 1], 1.0))
    assert step.jump_sizes.tolist() == [1.0]


def test_nelson_aalen_ties_count_once():
    # two failures at 1: at-risk 4, increment 1/4 (one term per distinct time)
    step = nelson_aalen(SurvivalData([1, 1, 2, 3], [1, 1, 1, 0], 3))
    np.testing.assert_allclose(step.jump_sizes, [1 / 4, 1 / 2])


def test_nelson_aalen_horizon_and_errors():
    step = nelson_aalen(SurvivalData([1, 2, 5], [1, 1, 1], 3))
    assert step.upper == 3 and step.jump_x.tolist() == [1, 2]
    with pytest.raises(ModelError):
        nelson_aalen(SurvivalData([1, 2], [0, 0], 3))
    with pytest.raises(InputError):
        SurvivalData([1, -2], [1, 1], 3)
    with pytest.raises(InputError):
        SurvivalData([1, 2], [1, 2], 3)


# -- integrated process -----------------------------------------------------


def test_primitive_process_unit_jump():
    x, y = primitive_process(CadlagStep(0, 2, 0.0, [1.0], [1.0]))
    assert x.tolist() == [0, 1, 2] and y.tolist() == [0, 1, 1]


def test_primitive_process_zero_and_constant():
    for base in (0.0, 0.7):
        x, y = primitive_process(CadlagStep(0, 1, base))
        assert x.tolist() == [0, 1] and y.tolist() == [0, 0]


def test_primitive_process_riemann_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        jx = np.sort(rng.choice(np.arange(1, 1000), size=30, replace=False)) / 1000
        step = CadlagStep(0, 1, 0.2, jx, 0.2 + np.cumsum(rng.standard_normal(30)))
        x, y = primitive_process(step)
        # midpoint rule on a grid containing every jump is exact for a step
        edges = np.linspace(0, 1, 1001)
        mid = 0.5 * (edges[1:] + edges[:-1])
        riemann = np.sum(step(mid)) / 1000
        assert y[-1] == pytest.approx(step(1.0) - riemann, abs=1e-12)
        assert y[-1] == pytest.approx(np.sum(np.diff(x) * (step(1.0) - step.levels[:x.size - 1])), abs=1e-12)


def test_primitive_process_jump_at_b():
    x, y = primitive_process(CadlagStep(0, 1, 0.0, [0.5, 1.0], [1.0, 3.0]))
    assert x.tolist() == [0, 0.5, 1.0]
    assert y.tolist() == [0, 1.5, 2.5]


# -- drivers and surrogate --------------------------------------------------


def test_driver_validation():
    with pytest.raises(InputError):
        GaussDriver("levy", [0, 1], [0, 0])
    with pytest.raises(InputError):
        GaussDriver("motion", [0, 1], [1, 0])
    with pytest.raises(InputError):
        simulate_driver("bridge", [0.0, 0.0], np.random.default_rng(0))


def test_surrogate_zero_path_is_curve():
    curve = linear_curve(1.5)
    grid = np.linspace(0, 1, 11)
    d = GaussDriver("motion", curve.F(grid), np.zeros(11))
    x, y = gaussian_surrogate(curve, d, 100, grid)
    np.testing.assert_array_equal(y, curve.F(grid))


def test_surrogate_bridge_endpoints():
    curve = linear_curve(1.5)
    grid = np.linspace(0, 1, 101)
    d = simulate_driver("bridge", curve.F(grid), np.random.default_rng(1))
    _, y = gaussian_surrogate(curve, d, 50, grid)
    assert y[0] == 0.0 and y[-1] == curve.F(1.0)


def test_surrogate_grid_checks():
    curve = linear_curve(1.5)
    d = GaussDriver("motion", [0, 1], [0, 0])
    with pytest.raises(InputError):
        gaussian_surrogate(curve, d, 10, [0.5, 1.5])
    with pytest.raises(InputError):
        gaussian_surrogate(curve, d, 10, [0.0, 0.5, 1.0])


def test_bridge_variance_monte_carlo():
    curve = linear_curve(1.5)
    grid = np.linspace(0, 1, 21)
    L = curve.F(grid)
    n, reps, k = 25, 10_000, 8
    rng = np.random.default_rng(2024)
    vals = np.empty(reps)
    for r in range(reps):
        _, y = gaussian_surrogate(curve, simulate_driver("bridge", L, rng), n, grid)
        vals[r] = y[k] - L[k]
    Lt, Lb = L[k], L[-1]
    target = Lt * (1 - Lt / Lb) / n
    # standard error of a Gaussian sample variance
    se = target * np.sqrt(2 / (reps - 1))
    assert abs(vals.var(ddof=1) - target) < 3 * se


def test_motion_increments_monte_carlo():
    curve = linear_curve(1.5)
    grid = np.linspace(0, 1, 11)
    L = curve.F(grid)
    n, reps = 16, 10_000
    rng = np.random.default_rng(7)
    inc = np.empty((reps, 2))
    for r in range(reps):
        _, y = gaussian_surrogate(curve, simulate_driver("motion", L, rng), n, grid)
        z = y - L
        inc[r] = z[3] - z[2], z[7] - z[6]
    for j, (lo, hi) in enumerate(((2, 3), (6, 7))):
        target = (L[hi] - L[lo]) / n
        assert abs(inc[:, j].var(ddof=1) - target) < 3 * target * np.sqrt(2 / (reps - 1))
    # independence: correlation of disjoint increments within 3 standard errors of 0
    corr = np.corrcoef(inc.T)[0, 1]
    assert abs(corr) < 3 / np.sqrt(reps)
