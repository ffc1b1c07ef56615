import math
import warnings

import numpy as np
import pytest

from levystop.errors import DomainError, LevyStopWarning, PreconditionError, UnsupportedModelError, UsageError
from levystop.fluctuation import Side, extrema_law
from levystop.models import Family, LevyModel
from levystop.scale import build_scale_table
from levystop.simulation import Passage, PathGrid, PowerPayoff, RussianPayoff, ThresholdRule, estimate_stopped_payoff
from levystop.solvers import (
    Problem,
    mckean_value_profile,
    ns_exponential_value_profile,
    ns_value_profile,
    profile,
    solve,
    solve_mckean,
    solve_ns,
    solve_ns_exponential,
    solve_ss,
    ss_f_prime,
    ss_g,
    ss_value_profile,
)

SS_THRESHOLD = math.atanh(1.0 / math.sqrt(2.0)) / math.sqrt(2.0)


class TestMcKean:
    def test_brownian_threshold(self, bm):
        solution = solve_mckean(bm, 0.5, 1.0)
        assert solution.problem is Problem.MCKEAN
        assert solution.threshold == pytest.approx(-math.log(2.0))
        assert solution.stops_below
        assert solution.diagnostics["boundary_value"] == pytest.approx(0.5)

    def test_value_function(self, bm):
        solution = solve_mckean(bm, 0.5, 1.0)
        y = solution.threshold
        assert solution.value(y - 1.0) == pytest.approx(1.0 - math.exp(y - 1.0))
        for x in (y, 0.0, 1.0):
            assert solution.value(x) == pytest.approx(0.25 * math.exp(-x))
        h = 1e-5
        slope = (solution.value(y + h) - solution.value(y - h)) / (2 * h)
        assert slope == pytest.approx(-0.5, rel=1e-3)

    def test_profile(self, bm):
        for y in (-1.0, -0.3):
            assert mckean_value_profile(bm, 0.5, 1.0, 0.0, y) == pytest.approx(math.exp(y) - math.exp(2 * y))
        solution = solve_mckean(bm, 0.5, 1.0)
        assert solution.profile(0.0, solution.threshold) == pytest.approx(0.25)
        assert solution.profile(0.0, -1.0) < 0.25
        with pytest.raises(DomainError):
            mckean_value_profile(bm, 0.5, 1.0, 0.0, 0.1)

    def test_strike_scaling(self, bm):
        assert solve_mckean(bm, 0.5, 3.0).threshold == pytest.approx(math.log(1.5))
        with pytest.raises(DomainError):
            solve_mckean(bm, 0.5, 0.0)
        with pytest.raises(DomainError):
            solve_mckean(bm, 0.0, 1.0)

    def test_empirical_law(self, models):
        law = extrema_law(models["jump_diffusion"], 1.0, Side.INFIMUM, n_samples=1000, seed=3, dt=1e-2)
        solution = solve_mckean(models["jump_diffusion"], 1.0, 2.0, law=law)
        assert solution.threshold == pytest.approx(math.log(2.0 * np.mean(np.exp(law.samples))))
        assert solution.threshold < math.log(2.0)
        assert solution.diagnostics["exp_functional_inf_se"] > 0


class TestNovikovShiryaev:
    @pytest.mark.parametrize("nu", [1.0, 2.0])
    def test_integer_powers(self, bm, nu):
        solution = solve_ns(bm, 0.5, nu)
        a = solution.threshold
        assert a == pytest.approx(nu)
        assert solution.value(0.0) == pytest.approx(a**nu * math.exp(-a))
        assert solution.value(0.5) == pytest.approx(a**nu * math.exp(0.5 - a))
        assert solution.value(a + 1.0) == pytest.approx((a + 1.0) ** nu)
        assert abs(solution.diagnostics["root_residual"]) < 1e-9

    def test_fractional_power(self, bm):
        solution = solve_ns(bm, 0.5, 1.5)
        assert solution.threshold == pytest.approx(1.5, rel=1e-8)
        assert solution.value(0.0) == pytest.approx(1.5**1.5 * math.exp(-1.5), rel=1e-6)

    def test_profile_is_maximised_at_root(self, bm):
        solution = solve_ns(bm, 0.5, 2.0)
        best = solution.profile(0.0, 2.0)
        assert best == pytest.approx(4.0 * math.exp(-2.0))
        for a in (1.0, 1.5, 2.5, 3.0):
            assert ns_value_profile(bm, 0.5, 2.0, 0.0, a) == pytest.approx(a * a * math.exp(-a))
            assert solution.profile(0.0, a) < best
        with pytest.raises(DomainError):
            ns_value_profile(bm, 0.5, 2.0, 0.0, 0.0)

    def test_spectrally_negative_exact_law(self, models):
        model = models["sn_cl"]
        solution = solve_ns(model, 1.0, 1.0)
        law = solution.context["law"]
        assert law.is_exact
        assert solution.threshold == pytest.approx(1.0 / law.rate)

    def test_empirical_law(self, models):
        model = models["jump_diffusion"]
        solution = solve_ns(model, 1.0, 1.0, n_samples=2000, seed=3, dt=1e-2)
        law = solution.context["law"]
        assert not law.is_exact
        assert solution.threshold == pytest.approx(law.moment(1), rel=1e-9)


class TestNovikovShiryaevExponential:
    def test_brownian_threshold(self, bm):
        solution = solve_ns_exponential(bm, 0.5)
        a = solution.threshold
        assert a == pytest.approx(math.log(2.0))
        assert solution.value(0.0) == pytest.approx(0.25)
        assert solution.value(a) == pytest.approx(0.5)
        assert solution.value(2.0) == pytest.approx(1.0 - math.exp(-2.0))

    def test_profile(self, bm):
        a = math.log(2.0)
        for level in (0.3, 1.0):
            expected = math.exp(-level) * (1.0 - math.exp(-level))
            assert ns_exponential_value_profile(bm, 0.5, 0.0, level) == pytest.approx(expected)
            assert expected < 0.25
        assert ns_exponential_value_profile(bm, 0.5, 0.2, a) == pytest.approx(0.5 * math.exp(0.2 - a))


class TestSheppShiryaev:
    def test_brownian_threshold(self, bm):
        solution = solve_ss(bm, 1.0)
        assert solution.threshold == pytest.approx(SS_THRESHOLD, rel=1e-9)
        assert solution.value(0.0) == pytest.approx(math.sqrt(2.0))
        assert solution.value(-1.0) == pytest.approx(math.sqrt(2.0))
        assert solution.value(2.0) == pytest.approx(math.exp(2.0))
        assert solution.diagnostics["g0"] == pytest.approx(1.0)
        assert solution.diagnostics["scale_repr"] == "ClosedFormBM"
        assert abs(solution.diagnostics["root_residual"]) < 1e-9

    def test_profile_is_maximised_at_threshold(self, bm):
        solution = solve_ss(bm, 1.0)
        best = solution.profile(0.0, solution.threshold)
        assert best == pytest.approx(math.sqrt(2.0))
        for z in (0.3, 0.5, 0.8, 1.2):
            assert ss_value_profile(bm, 1.0, 0.0, z) < best
        assert ss_value_profile(bm, 1.0, 2.0, 1.0) == pytest.approx(math.exp(2.0))
        with pytest.raises(DomainError):
            ss_value_profile(bm, 1.0, -0.1, 1.0)

    def test_value_matches_profile_inside(self, bm):
        solution = solve_ss(bm, 1.0)
        for x in (0.1, 0.4):
            assert solution.value(x) == pytest.approx(solution.profile(x, solution.threshold), rel=1e-9)

    def test_f_prime_changes_sign(self, bm):
        solution = solve_ss(bm, 1.0)
        assert "f_prime_left" in solution.diagnostics
        table = solution.context["table"]
        assert ss_g(table, 0.0) == pytest.approx(1.0)
        assert ss_f_prime(table, 0.3) * ss_f_prime(table, 1.5) < 0
        with pytest.raises(UsageError):
            ss_f_prime(build_scale_table(bm, 1.0, method="inversion"), 0.5)

    def test_inversion_backend(self, bm, models):
        for model, q in ((bm, 1.0), (models["sn_cl"], 1.0)):
            exact = solve_ss(model, q)
            inverted = solve_ss(model, q, method="inversion")
            assert inverted.diagnostics["scale_repr"] == "NumericInversion"
            assert inverted.threshold == pytest.approx(exact.threshold, rel=1e-7)

    def test_jump_models(self, models):
        sn = solve_ss(models["sn_cl"], 1.0)
        assert sn.threshold > 0
        assert sn.value(0.0) >= 1.0
        bv = solve_ss(models["bv_sn"], 1.75)
        assert bv.diagnostics["g0"] == pytest.approx(0.125)
        assert bv.diagnostics["conditions"]["q_below_drift"] is True
        assert bv.threshold > 0

    def test_preconditions(self, models):
        with pytest.raises(PreconditionError, match="q < d"):
            solve_ss(models["bv_sn"], 2.5)
        with pytest.raises(PreconditionError):
            solve_ss(models["sn_cl"], 0.2)
        with pytest.raises(UnsupportedModelError):
            solve_ss(models["jump_diffusion"], 1.0)

    def test_negative_psi1_warns(self):
        model = LevyModel(Family.BROWNIAN_DRIFT, mu=-2.0, sigma=1.0)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            solution = solve_ss(model, 0.1)
        assert any(issubclass(w.category, LevyStopWarning) for w in caught)
        assert solution.diagnostics["conditions"]["psi1_negative"]
        assert solution.threshold > 0


def test_dispatch(bm):
    assert solve("mckean", bm, 0.5, strike=1.0).threshold == pytest.approx(-math.log(2.0))
    assert solve(Problem.NOVIKOV_SHIRYAEV, bm, 0.5, nu=1.0).threshold == pytest.approx(1.0)
    assert solve("ns-exp", bm, 0.5).threshold == pytest.approx(math.log(2.0))
    assert solve("ss", bm, 1.0).threshold == pytest.approx(SS_THRESHOLD)
    assert profile("ns", bm, 0.5, 0.0, 1.0, nu=1.0) == pytest.approx(math.exp(-1.0))
    with pytest.raises(UsageError):
        solve("mckean", bm, 0.5)
    with pytest.raises(UsageError):
        solve("ns", bm, 0.5)
    with pytest.raises(ValueError):
        solve("american", bm, 0.5)


def test_solution_outputs(bm):
    solution = solve("ns-exp", bm, 0.5)
    payload = solution.to_dict()
    assert payload["problem"] == "ns-exp"
    assert payload["threshold"] == pytest.approx(math.log(2.0))
    assert payload["diagnostics"]["law"]["kind"] == "ExactExponential"
    frame = solution.value_grid([0.0, 1.0])
    assert list(frame.columns) == ["x", "value", "payoff"]
    assert frame["payoff"][1] == pytest.approx(1.0 - math.exp(-1.0))
    assert solution.payoff(-1.0) == 0.0


@pytest.mark.parametrize(
    "problem, name, q, params, lo, hi",
    [
        ("mckean", "bm", 0.5, {"strike": 1.0}, -3.0, 2.0),
        ("mckean", "bm_drift", 1.0, {"strike": 2.0}, -3.0, 2.0),
        ("ns", "bm", 0.5, {"nu": 1.0}, -1.0, 4.0),
        ("ns", "bm", 0.5, {"nu": 1.5}, -1.0, 4.0),
        ("ns", "sn_cl", 1.0, {"nu": 2.0}, -1.0, 4.0),
        ("ns-exp", "bm", 0.5, {}, -1.0, 4.0),
        ("ns-exp", "sn_cl", 1.0, {}, -1.0, 4.0),
        ("ss", "bm", 1.0, {}, 0.0, 3.0),
        ("ss", "sn_cl", 1.0, {}, 0.0, 3.0),
        ("ss", "bv_sn", 1.75, {}, 0.0, 3.0),
    ],
)
def test_value_dominates_payoff(models, problem, name, q, params, lo, hi):
    solution = solve(problem, models[name], q, **params)
    frame = solution.value_grid(np.linspace(lo, hi, 200))
    assert (frame["value"] - frame["payoff"] >= -1e-9).all()


@pytest.mark.parametrize(
    "problem, q, params",
    [("mckean", 0.5, {"strike": 1.0}), ("ns", 0.5, {"nu": 2.0}), ("ns-exp", 0.5, {}), ("ss", 1.0, {})],
)
def test_profile_peaks_at_threshold(bm, problem, q, params):
    solution = solve(problem, bm, q, **params)
    levels = np.linspace(solution.threshold - 0.5, solution.threshold + 0.5, 101)
    values = [solution.profile(0.0, level) for level in levels]
    best = levels[int(np.argmax(values))]
    assert abs(best - solution.threshold) <= levels[1] - levels[0]


@pytest.mark.parametrize("name, q", [("bm", 1.0), ("sn_cl", 1.0), ("bv_sn", 1.75)])
def test_g_changes_sign_once(models, name, q):
    table = build_scale_table(models[name], q)
    signs = np.sign(ss_g(table, np.linspace(0.0, 5.0, 501)))
    assert signs[0] > 0 and signs[-1] < 0
    assert np.count_nonzero(np.diff(signs[signs != 0])) == 1


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_supremum_representation_matches_first_passage(bm, a):
    grid = PathGrid.for_discount(0.5, dt=1e-3, seed=60)
    estimate = estimate_stopped_payoff(bm, 0.5, ThresholdRule(Passage.UP, a), PowerPayoff(1.0), grid=grid, n_paths=10_000)
    assert abs(estimate.mean - ns_value_profile(bm, 0.5, 1.0, 0.0, a)) <= 3.0 * estimate.std_error


@pytest.mark.slow
def test_reflected_simulation_reproduces_russian_value(bm):
    solution = solve_ss(bm, 1.0)
    grid = PathGrid.for_discount(1.0, dt=1e-3, seed=61)
    estimate = estimate_stopped_payoff(
        bm, 1.0, ThresholdRule(Passage.REFLECTED, solution.threshold), RussianPayoff(), grid=grid, n_paths=100_000
    )
    # second-order grid error is O(dt)
    assert abs(estimate.mean - math.cosh(math.sqrt(2.0) * SS_THRESHOLD)) <= 3.0 * estimate.std_error + 1e-3 * math.sqrt(2.0)
