import math
import time
import warnings

import numpy as np
import pytest

from levystop.errors import DomainError, LevyStopWarning, UsageError
from levystop.simulation import (
    ExpPayoff,
    ExponentialPayoff,
    Passage,
    PathGrid,
    PowerPayoff,
    PutPayoff,
    RussianPayoff,
    ThresholdRule,
    estimate_stopped_payoff,
    grid_shift,
    sample_passages,
    simulate_paths,
    sweep_threshold,
)

SS_THRESHOLD = math.atanh(1.0 / math.sqrt(2.0)) / math.sqrt(2.0)


def close(estimate, target, sigma, dt):
    """3 standard errors plus the discrete-monitoring allowance"""
    allowance = sigma * math.sqrt(dt) * max(1.0, abs(target))
    return abs(estimate.mean - target) <= 3.0 * estimate.std_error + allowance


class TestPathGrid:
    def test_for_discount(self):
        grid = PathGrid.for_discount(1.0, dt=0.01, seed=3)
        assert math.exp(-grid.t_max) <= 1e-6
        assert grid.n_steps == math.ceil(grid.t_max / 0.01 - 1e-9)
        assert PathGrid(dt=0.1, t_max=1.0).n_steps == 10

    @pytest.mark.parametrize(
        "kwargs", [{"dt": 0.0}, {"t_max": -1.0}, {"seed": -1}, {"seed": True}, {"seed": 1.5}]
    )
    def test_validation(self, kwargs):
        with pytest.raises(DomainError):
            PathGrid(**kwargs)


class TestSimulatePaths:
    def test_brownian_moments(self, bm):
        grid = PathGrid(dt=0.01, t_max=1.0, seed=1)
        (batch,) = list(simulate_paths(bm, grid, 4000, x0=0.5))
        assert batch.values.shape == (4000, 101)
        assert batch.times[-1] == pytest.approx(1.0)
        assert np.all(batch.values[:, 0] == 0.5)
        end = batch.values[:, -1]
        assert abs(end.mean() - 0.5) < 4.0 / math.sqrt(4000)
        assert end.var() == pytest.approx(1.0, abs=0.1)
        assert batch.jump_time.size == 0

    def test_reproducible(self, models):
        grid = PathGrid(dt=0.01, t_max=0.5, seed=9)
        first = list(simulate_paths(models["jump_diffusion"], grid, 1500))
        second = list(simulate_paths(models["jump_diffusion"], grid, 1500))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.values, b.values)
            np.testing.assert_array_equal(a.jump_time, b.jump_time)
        other = next(simulate_paths(models["jump_diffusion"], PathGrid(dt=0.01, t_max=0.5, seed=10), 1500))
        assert not np.array_equal(first[0].values, other.values)

    def test_jumps_are_recorded(self, models):
        grid = PathGrid(dt=0.01, t_max=2.0, seed=4)
        batch = next(simulate_paths(models["sn_cl"], grid, 2000))
        # two jumps per path on average
        assert batch.jump_time.size == pytest.approx(4000, rel=0.1)
        assert np.all(batch.jump_post < batch.jump_pre)
        assert np.all((batch.jump_time > 0) & (batch.jump_time <= 2.0 + 1e-12))
        order = np.lexsort((batch.jump_time, batch.jump_path))
        np.testing.assert_array_equal(order, np.arange(order.size))

    def test_antithetic_pairs(self, bm):
        grid = PathGrid(dt=0.01, t_max=1.0, seed=2, antithetic=True)
        batch = next(simulate_paths(bm, grid, 1000))
        np.testing.assert_allclose(batch.values[:500], -batch.values[500:], atol=1e-12)


class TestEstimate:
    def test_first_passage_laplace_transform(self, bm):
        grid = PathGrid.for_discount(0.5, dt=2e-3, seed=21)
        estimate = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.DOWN, -1.0), ExponentialPayoff(0.0), grid=grid, n_paths=4000
        )
        assert estimate.n_paths == 4000
        assert estimate.std_error > 0
        assert close(estimate, math.exp(-1.0), 1.0, 2e-3)
        assert estimate.truncation_bias_bound < 1e-5

    def test_put(self, bm):
        grid = PathGrid.for_discount(0.5, dt=2e-3, seed=22)
        y = -math.log(2.0)
        estimate = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.DOWN, y), PutPayoff(1.0), grid=grid, n_paths=4000
        )
        assert close(estimate, 0.25, 1.0, 2e-3)

    def test_power_and_exp_payoffs(self, bm):
        grid = PathGrid.for_discount(0.5, dt=2e-3, seed=23)
        power = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.UP, 1.0), PowerPayoff(1.0), grid=grid, n_paths=4000
        )
        assert close(power, math.exp(-1.0), 1.0, 2e-3)
        a = math.log(2.0)
        bounded = estimate_stopped_payoff(bm, 0.5, ThresholdRule("up", a), ExpPayoff(), grid=grid, n_paths=4000)
        assert close(bounded, 0.25, 1.0, 2e-3)

    def test_russian(self, bm):
        grid = PathGrid.for_discount(1.0, dt=1e-3, seed=24)
        estimate = estimate_stopped_payoff(
            bm, 1.0, ThresholdRule(Passage.REFLECTED, SS_THRESHOLD), RussianPayoff(), grid=grid, n_paths=4000
        )
        assert close(estimate, math.sqrt(2.0), 1.0, 1e-3)

    def test_antithetic_estimate(self, bm):
        grid = PathGrid.for_discount(0.5, dt=2e-3, seed=25, antithetic=True)
        estimate = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.DOWN, -1.0), ExponentialPayoff(0.0), grid=grid, n_paths=4001
        )
        assert estimate.n_paths == 4002
        assert close(estimate, math.exp(-1.0), 1.0, 2e-3)

    def test_rule_must_match_payoff(self, bm):
        with pytest.raises(UsageError):
            estimate_stopped_payoff(bm, 0.5, ThresholdRule(Passage.UP, 1.0), PutPayoff(1.0))
        with pytest.raises(DomainError):
            estimate_stopped_payoff(bm, 0.5, ThresholdRule(Passage.DOWN, -1.0), PutPayoff(1.0), n_paths=10)
        with pytest.raises(DomainError):
            estimate_stopped_payoff(bm, 1.0, ThresholdRule(Passage.REFLECTED, 0.5), RussianPayoff(), x0=-0.1)

    def test_truncation_warning(self, bm):
        # a horizon far too short for the discount rate
        grid = PathGrid(dt=0.01, t_max=0.5, seed=26)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            estimate = estimate_stopped_payoff(
                bm, 0.1, ThresholdRule(Passage.UP, 3.0), ExpPayoff(), grid=grid, n_paths=1000
            )
        assert estimate.truncation_bias_bound > 0.5
        assert estimate.to_dict()["ci95"][0] <= estimate.mean
        assert estimate.std_error == 0.0 or any(issubclass(w.category, LevyStopWarning) for w in caught)


class TestSamplePassages:
    def test_down_passages(self, bm):
        frame = sample_passages(bm, ThresholdRule(Passage.DOWN, -0.5), grid=PathGrid(dt=0.01, t_max=5.0, seed=5))
        assert list(frame.columns) == ["stopped", "time", "x", "m"]
        assert len(frame) == 1000
        stopped = frame[frame["stopped"]]
        assert 0 < len(stopped) < len(frame)
        # Brownian paths creep: the passage is settled on the level
        np.testing.assert_allclose(stopped["x"], -0.5)
        assert (stopped["time"] <= 5.0 + 1e-9).all()
        assert (stopped["m"] >= stopped["x"]).all()
        assert frame.loc[~frame["stopped"], "time"].isin([np.inf]).all()

    def test_reflected_passages(self, bm):
        frame = sample_passages(
            bm, ThresholdRule(Passage.REFLECTED, 0.3), x0=0.2, grid=PathGrid(dt=0.01, t_max=5.0, seed=6)
        )
        stopped = frame[frame["stopped"]]
        assert len(stopped) > 0.99 * len(frame)
        assert (stopped["m"] >= 0.2).all()
        np.testing.assert_allclose(stopped["m"] - stopped["x"], 0.3)

    def test_jump_passages_overshoot(self, models):
        grid = PathGrid(dt=0.01, t_max=5.0, seed=7)
        frame = sample_passages(models["bv_sn"], ThresholdRule(Passage.DOWN, -0.5), grid=grid)
        stopped = frame[frame["stopped"]]
        assert len(stopped) > 0
        assert (stopped["x"] < -0.5).all()

        mixed = sample_passages(models["sn_cl"], ThresholdRule(Passage.DOWN, -0.5), grid=grid)
        x = mixed.loc[mixed["stopped"], "x"].to_numpy()
        assert (x <= -0.5 + 1e-12).all()
        # some paths creep onto the level, others jump over it
        assert np.isclose(x, -0.5).any() and (x < -0.5 - 1e-6).any()


class TestSweep:
    def test_put_sweep(self, bm):
        levels = np.linspace(-1.3, -0.1, 13)
        grid = PathGrid.for_discount(0.5, dt=2e-3, seed=31)
        result = sweep_threshold(bm, 0.5, PutPayoff(1.0), 0.0, levels, n_paths=4000, grid=grid)
        assert list(result.table.columns) == ["y", "estimate", "std_error", "n_paths"]
        for y, estimate in zip(levels, result.estimates):
            assert close(estimate, math.exp(y) - math.exp(2 * y), 1.0, 2e-3)
        y_star = -math.log(2.0)
        assert result.interval[0] <= result.argmax <= result.interval[1]
        assert result.contains(y_star, tol=grid_shift(bm, 2e-3))
        assert result.estimate_at(-0.7) is result.estimates[6]
        payload = result.to_dict()
        assert payload["n_levels"] == 13 and payload["payoff"] == "put"

    def test_grid_checks(self, bm):
        with pytest.raises(DomainError):
            sweep_threshold(bm, 0.5, PutPayoff(1.0), 0.0, [-0.5, -1.0], n_paths=1000)
        with pytest.raises(DomainError):
            sweep_threshold(bm, 0.5, PutPayoff(1.0), 0.0, [], n_paths=1000)
        grid = PathGrid(dt=0.01, t_max=2.0, seed=1)
        with pytest.warns(LevyStopWarning):
            sweep_threshold(bm, 0.5, PutPayoff(1.0), 0.0, [-1.0, -0.5], n_paths=1000, grid=grid)

    @pytest.mark.slow
    def test_default_budget_put_sweep(self, bm):
        levels = np.linspace(-1.4, 0.0, 41)
        grid = PathGrid.for_discount(0.5, seed=41)
        started = time.perf_counter()
        result = sweep_threshold(bm, 0.5, PutPayoff(1.0), 0.0, levels, grid=grid)
        assert time.perf_counter() - started < 60.0
        assert result.estimates[0].n_paths == 100_000
        assert result.contains(-math.log(2.0), tol=grid_shift(bm, grid.dt))


class TestGridMonitoring:
    def test_shift_scales_with_sigma(self, models, bm):
        assert grid_shift(bm, 1e-2) == pytest.approx(0.05826)
        assert grid_shift(models["bv_sn"], 1e-2) == 0.0

    def test_coarse_grid_passage_is_unbiased(self, bm):
        # E[e^{-q tau}] = e^{-sqrt(2q)|y|}; without the correction the bias at dt=0.02 is about 0.03
        grid = PathGrid.for_discount(0.5, dt=0.02, seed=51)
        estimate = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.DOWN, -1.0), ExponentialPayoff(0.0), grid=grid, n_paths=8000
        )
        assert abs(estimate.mean - math.exp(-1.0)) <= 3.0 * estimate.std_error + 0.005

    def test_coarse_grid_up_passage(self, bm):
        grid = PathGrid.for_discount(0.5, dt=0.02, seed=52)
        estimate = estimate_stopped_payoff(
            bm, 0.5, ThresholdRule(Passage.UP, 1.0), PowerPayoff(1.0), grid=grid, n_paths=8000
        )
        assert abs(estimate.mean - math.exp(-1.0)) <= 3.0 * estimate.std_error + 0.005

    def test_blocks_match_across_lengths(self, models):
        # horizons that end inside a block keep every grid point
        grid = PathGrid(dt=0.01, t_max=0.67, seed=8)
        batch = next(simulate_paths(models["jump_diffusion"], grid, 1000))
        assert batch.values.shape == (1000, 68)
        assert np.all(batch.values[:, 0] == 0.0)
        assert np.all(np.isfinite(batch.values))
        assert np.all(np.diff(batch.jump_time[batch.jump_path == batch.jump_path[0]]) > 0)
