"""Tests for pricing estimators: bounds, midpoints, parity, and reporting."""

from __future__ import annotations

import math

import numpy as np
import pytest

from bridgebound.estimators import (
    EstimatorResult,
    confidence_interval,
    discrete_barrier_interpolate,
    knock_in_price,
    path_contributions,
    point_estimators,
    price,
    rebate_price,
)
from bridgebound.model import (
    MarketModel,
    ModelError,
    OptionSpec,
    Regime,
    TimeGrid,
    load_config,
)

Z_95 = 1.959963984540054


def barrier_free_model(d=1, sigma=0.3, rate=0.1, maturity=0.5, steps=1, corr=None):
    regime = Regime(mu=[rate] * d, sigma=[sigma] * d, corr=corr)
    return MarketModel(
        spot=[100.0] * d, rate=rate, grid=TimeGrid.uniform(maturity, steps), regimes=(regime,)
    )


class TestPointEstimators:
    def test_midpoints_and_spreads(self):
        lo = EstimatorResult(mean=1.0, std_error=0.1, n_paths=100)
        mid = EstimatorResult(mean=2.0, std_error=0.2, n_paths=100)
        hi = EstimatorResult(mean=4.0, std_error=0.3, n_paths=100)
        q0, q1, q2 = point_estimators(lo, mid, hi)
        assert q0.value == 2.5 and q0.std_error == pytest.approx(1.5 + 0.2)
        assert q1.value == 1.5 and q1.std_error == pytest.approx(0.5 + 0.15)
        assert q2.value == 3.0 and q2.std_error == pytest.approx(1.0 + 0.25)

    def test_collapsed_bracket_keeps_statistical_error(self):
        a = EstimatorResult(mean=5.0, std_error=0.2, n_paths=100)
        q0, _, _ = point_estimators(a, a, a)
        assert q0.value == 5.0
        assert q0.std_error == pytest.approx(0.2)


class TestConfidenceInterval:
    def test_two_sided_95(self):
        lo = EstimatorResult(mean=1.0, std_error=0.5, n_paths=100)
        hi = EstimatorResult(mean=3.0, std_error=0.25, n_paths=100)
        ci = confidence_interval(lo, hi, alpha=0.05)
        assert ci[0] == pytest.approx(1.0 - Z_95 * 0.5, rel=1e-12)
        assert ci[1] == pytest.approx(3.0 + Z_95 * 0.25, rel=1e-12)

    def test_narrower_at_larger_alpha(self):
        lo = EstimatorResult(mean=1.0, std_error=0.5, n_paths=100)
        hi = EstimatorResult(mean=3.0, std_error=0.5, n_paths=100)
        wide = confidence_interval(lo, hi, alpha=0.01)
        narrow = confidence_interval(lo, hi, alpha=0.5)
        assert wide[0] < narrow[0] < narrow[1] < wide[1]

    def test_alpha_validated(self):
        lo = EstimatorResult(mean=1.0, std_error=0.5, n_paths=100)
        with pytest.raises(ValueError, match="alpha"):
            confidence_interval(lo, lo, alpha=0.0)


class TestDiscreteBarrierInterpolate:
    def test_interpolates_through_the_fitted_point(self):
        assert discrete_barrier_interpolate(8.794, 9.74, 16, 16) == pytest.approx(
            9.74, rel=1e-12
        )

    def test_infinite_target_returns_continuous(self):
        assert discrete_barrier_interpolate(8.794, 9.74, 16, math.inf) == 8.794

    def test_sqrt_frequency_scaling(self):
        """Calibrated at 16 dates, predicting 256 dates quarters the gap."""
        out = discrete_barrier_interpolate(8.794, 9.74, 16, 256)
        assert out == pytest.approx(8.794 + (9.74 - 8.794) / 4.0, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="m_low"):
            discrete_barrier_interpolate(1.0, 2.0, 0, 4)
        with pytest.raises(ValueError, match="m_target"):
            discrete_barrier_interpolate(1.0, 2.0, 4, 0.5)


class TestPriceArguments:
    def test_n_paths_floor(self):
        model, spec = load_config("table1a")
        with pytest.raises(ValueError, match="n_paths"):
            price(model, spec, 1)

    def test_alpha_range(self):
        model, spec = load_config("table1a")
        with pytest.raises(ValueError, match="alpha"):
            price(model, spec, 100, alpha=1.0)

    def test_workers_floor(self):
        model, spec = load_config("table1a")
        with pytest.raises(ValueError, match="workers"):
            price(model, spec, 100, workers=0)

    def test_invalid_model_rejected(self):
        model = barrier_free_model()
        bad = OptionSpec(kind="call", strike=-5.0)
        with pytest.raises(ModelError, match="strike"):
            price(model, bad, 100)

    def test_rebate_on_knock_in_rejected(self):
        model, spec = load_config("table1a")
        ki = OptionSpec(kind=spec.kind, strike=spec.strike, knock="in", rebate=2.0)
        with pytest.raises(ValueError, match="rebate"):
            price(model, ki, 100)
        with pytest.raises(ValueError, match="rebate"):
            knock_in_price(model, ki, 100)
        with pytest.raises(ValueError, match="rebate"):
            rebate_price(model, ki, 100, rebate=2.0)


class TestPricingReport:
    def test_no_barriers_all_estimators_coincide(self):
        """Without barriers every variant is the plain discounted payoff."""
        model = barrier_free_model()
        spec = OptionSpec(kind="call", strike=100.0)
        report = price(model, spec, 20_000, seed=2)
        assert report.q_exact is not None
        for est in (report.q_lower, report.q_indep, report.q_upper, report.q_exact):
            assert est.mean == report.q_s.mean
            assert est.std_error == report.q_s.std_error

    def test_exact_estimator_present_for_single_event_intervals(self):
        model, spec = load_config("table1a", steps=4)
        report = price(model, spec, 5000, seed=0)
        assert report.q_exact is not None
        assert report.q_exact.mean == report.q_upper.mean

    def test_exact_estimator_absent_for_double_barrier(self):
        model, spec = load_config("table2", steps=4)
        report = price(model, spec, 5000, seed=0)
        assert report.q_exact is None
        assert "q_exact" not in report.to_dict()["estimators"]

    def test_estimator_ordering(self):
        model, spec = load_config("table2", steps=8)
        report = price(model, spec, 20_000, seed=1)
        assert report.q_lower.mean <= report.q_indep.mean
        assert report.q_indep.mean <= report.q_upper.mean
        assert report.q_upper.mean <= report.q_s.mean

    def test_point_estimates_follow_from_estimators(self):
        model, spec = load_config("table2", steps=4)
        report = price(model, spec, 5000, seed=0)
        q0, q1, q2 = point_estimators(report.q_lower, report.q_indep, report.q_upper)
        assert report.q0 == q0
        assert report.q1 == q1
        assert report.q2 == q2

    def test_ci_matches_confidence_interval(self):
        model, spec = load_config("table2", steps=4)
        report = price(model, spec, 5000, seed=0, alpha=0.1)
        assert report.ci == confidence_interval(report.q_lower, report.q_upper, alpha=0.1)
        assert report.alpha == 0.1

    def test_to_dict_shape(self):
        model, spec = load_config("table1a")
        report = price(model, spec, 2000, seed=5)
        payload = report.to_dict()
        assert payload["n_paths"] == 2000
        assert payload["seed"] == 5
        assert set(payload["estimators"]) == {"q_s", "q_lower", "q_indep", "q_upper", "q_exact"}
        assert set(payload["point_estimates"]) == {"q0", "q1", "q2"}
        assert len(payload["ci"]) == 2

    def test_same_seed_same_report(self):
        model, spec = load_config("table1b", steps=2)
        a = price(model, spec, 4000, seed=9)
        b = price(model, spec, 4000, seed=9)
        assert a.to_dict() == b.to_dict()

    def test_worker_count_never_changes_results(self):
        """Chunked reduction is deterministic regardless of thread count."""
        model, spec = load_config("table2", steps=4)
        serial = price(model, spec, 3 * 32768 + 17, seed=3, workers=1)
        threaded = price(model, spec, 3 * 32768 + 17, seed=3, workers=4)
        assert serial.to_dict() == threaded.to_dict()


class TestKnockInParity:
    def test_knock_out_plus_knock_in_is_vanilla(self):
        """In-out parity holds estimator by estimator on shared paths."""
        model, spec = load_config("table1b", steps=4)
        n = 20_000
        ko = price(model, spec, n, seed=6)
        ki = knock_in_price(model, spec, n, seed=6)
        vanilla = barrier_free_model(d=2, sigma=0.3, rate=0.1, maturity=1.0, steps=4,
                                     corr=[[1.0, 0.5], [0.5, 1.0]])
        plain = price(vanilla, OptionSpec(kind="call", strike=100.0), n, seed=6)
        target = plain.q_s.mean
        # the knock-in role swap pairs q_upper with q_lower and vice versa
        assert ko.q_upper.mean + ki.q_lower.mean == pytest.approx(target, abs=1e-12)
        assert ko.q_lower.mean + ki.q_upper.mean == pytest.approx(target, abs=1e-12)
        assert ko.q_indep.mean + ki.q_indep.mean == pytest.approx(target, abs=1e-12)
        assert ko.q_s.mean + ki.q_s.mean == pytest.approx(target, abs=1e-12)

    def test_price_dispatches_on_knock_field(self):
        model, spec = load_config("table1a", steps=2)
        ki_spec = OptionSpec(kind=spec.kind, strike=spec.strike, asset=spec.asset, knock="in")
        via_price = price(model, ki_spec, 4000, seed=1)
        via_helper = knock_in_price(model, spec, 4000, seed=1)
        assert via_price.to_dict() == via_helper.to_dict()

    def test_knock_in_with_unreachable_barrier_is_worthless(self):
        """A zero lower barrier can never knock the option in."""
        regime = Regime(mu=[0.1], sigma=[0.3], lower=[0.0])
        model = MarketModel(
            spot=[100.0], rate=0.1, grid=TimeGrid.uniform(0.5, 2), regimes=(regime,)
        )
        report = knock_in_price(model, OptionSpec(kind="call", strike=100.0), 4000, seed=0)
        for est in (report.q_s, report.q_lower, report.q_indep, report.q_upper):
            assert est.mean == 0.0

    def test_certain_knock_in_recovers_vanilla(self):
        """A barrier one tick under spot is hit almost surely over a year."""
        regime = Regime(mu=[0.1], sigma=[0.6], lower=[99.99])
        model = MarketModel(
            spot=[100.0], rate=0.1, grid=TimeGrid.uniform(1.0, 16), regimes=(regime,)
        )
        n = 30_000
        ki = knock_in_price(model, OptionSpec(kind="call", strike=100.0), n, seed=4)
        vanilla = price(
            barrier_free_model(sigma=0.6, maturity=1.0, steps=16),
            OptionSpec(kind="call", strike=100.0), n, seed=4,
        )
        # q_upper(KI) uses the lower-bound weight, the certain-hit limit
        assert ki.q_upper.mean == pytest.approx(vanilla.q_s.mean, rel=2e-3)


class TestRebate:
    def test_zero_rebate_identical_to_plain_price(self):
        model, spec = load_config("table2", steps=4)
        plain = price(model, spec, 6000, seed=7)
        with_zero = rebate_price(model, spec, 6000, rebate=0.0, seed=7)
        assert plain.to_dict() == with_zero.to_dict()

    def test_pure_rebate_prices_the_hit_probability(self):
        """With a zero payoff the contract pays R on knock-out only."""
        model, spec = load_config("table1a", steps=4)
        zero_payoff = OptionSpec(kind="custom", payoff=lambda s: np.zeros(len(s)))
        n = 20_000
        report = rebate_price(model, zero_payoff, n, rebate=1.0, seed=8)
        cols = path_contributions(model, zero_payoff, n, seed=8)
        disc = math.exp(-model.rate * model.grid.maturity)
        alive = cols["alive"].astype(float)
        assert report.q_s.mean == pytest.approx(disc * np.mean(1.0 - alive), rel=1e-12)
        assert report.q_upper.mean == pytest.approx(
            disc * np.mean(1.0 - alive * cols["w_upper"]), rel=1e-12
        )

    def test_rebate_override_beats_spec_field(self):
        model, spec = load_config("table1a", steps=2)
        spec_with = OptionSpec(kind=spec.kind, strike=spec.strike, rebate=3.0)
        via_field = rebate_price(model, spec_with, 4000, seed=2)
        via_override = rebate_price(model, spec, 4000, rebate=3.0, seed=2)
        assert via_field.to_dict() == via_override.to_dict()

    def test_rebate_never_cheapens_the_option(self):
        model, spec = load_config("table2", steps=4)
        plain = price(model, spec, 6000, seed=3)
        sweet = rebate_price(model, spec, 6000, rebate=5.0, seed=3)
        assert sweet.q_s.mean >= plain.q_s.mean
        assert sweet.q_upper.mean >= plain.q_upper.mean


class TestPathContributions:
    def test_columns_and_lengths(self):
        model, spec = load_config("table1a", steps=2)
        cols = path_contributions(model, spec, 1000, seed=0)
        assert set(cols) == {"payoff", "alive", "w_lower", "w_indep", "w_upper", "w_exact"}
        assert all(len(v) == 1000 for v in cols.values())

    def test_no_exact_column_for_multi_event_intervals(self):
        model, spec = load_config("table2", steps=2)
        cols = path_contributions(model, spec, 1000, seed=0)
        assert "w_exact" not in cols

    def test_consistent_with_report(self):
        """Recomputing estimator means from the raw columns matches price."""
        model, spec = load_config("table2", steps=4)
        n = 40_000
        report = price(model, spec, n, seed=11)
        cols = path_contributions(model, spec, n, seed=11)
        alive = cols["alive"].astype(float)
        assert np.mean(cols["payoff"] * alive) == pytest.approx(report.q_s.mean, rel=1e-12)
        for name, est in [
            ("w_lower", report.q_lower),
            ("w_indep", report.q_indep),
            ("w_upper", report.q_upper),
        ]:
            mean = np.mean(cols["payoff"] * alive * cols[name])
            assert mean == pytest.approx(est.mean, rel=1e-12)

    def test_weights_in_unit_interval(self):
        model, spec = load_config("table2", steps=4)
        cols = path_contributions(model, spec, 5000, seed=1)
        for name in ("w_lower", "w_indep", "w_upper"):
            assert np.all((cols[name] >= 0.0) & (cols[name] <= 1.0))


class TestStandardErrors:
    def test_matches_direct_formula(self):
        """Chunked (sum, sumsq) reduction equals the textbook estimate."""
        model, spec = load_config("table1a", steps=2)
        n = 50_000
        report = price(model, spec, n, seed=5)
        cols = path_contributions(model, spec, n, seed=5)
        c = cols["payoff"] * cols["alive"].astype(float) * cols["w_exact"]
        se = float(np.std(c, ddof=1)) / math.sqrt(n)
        assert report.q_exact.std_error == pytest.approx(se, rel=1e-10)

    def test_se_shrinks_with_n(self):
        model, spec = load_config("table1a")
        small = price(model, spec, 5000, seed=1)
        large = price(model, spec, 80_000, seed=1)
        assert large.q_s.std_error < small.q_s.std_error
