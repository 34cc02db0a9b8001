import numpy as np
import pytest

import claimtails as ct
from claimtails.estimation import LogDomainError, MadConfig, Weighting, mad_weights


def half_cdf(x):
    return np.full_like(np.asarray(x, dtype=float), 0.5)


class TestAdStatistic:
    def test_single_observation_closed_form(self):
        s = ct.OrderedSample.from_values([1.0])
        assert ct.ad_statistic(s, half_cdf) == pytest.approx(2 * np.log(2) - 1)

    def test_brute_force_summation(self):
        rng = np.random.default_rng(42)
        n = 37
        f_vals = np.sort(rng.uniform(0.01, 0.99, n))
        s = ct.OrderedSample.from_values(np.arange(1.0, n + 1.0))
        got = ct.ad_statistic(s, lambda x: f_vals)
        total = 0.0
        for i in range(1, n + 1):
            fi = f_vals[i - 1]
            total += (2 * i - 1) * np.log(fi) + (2 * (n - i) + 1) * np.log(1 - fi)
        assert got == pytest.approx(-n - total / n, rel=1e-12)

    def test_mean_near_one_under_true_model(self):
        n = 10**4
        vals = []
        for seed in range(100):
            u = np.sort(np.random.default_rng(seed).uniform(1e-6, 1 - 1e-6, n))
            s = ct.OrderedSample.from_values(u)
            vals.append(ct.ad_statistic(s, lambda x: x))
        assert 0.8 <= float(np.mean(vals)) <= 1.2

    def test_degenerate_cdf_raises_with_rank(self):
        s = ct.OrderedSample.from_values([0.5, 1.5, 2.5])
        with pytest.raises(LogDomainError) as ei:
            ct.ad_statistic(s, ct.pareto(1.0, 1.0))
        assert ei.value.rank == 1


class TestMadObjective:
    def test_normalized_summand_is_one_at_edf_match(self):
        # sample placed exactly at the order-statistic expectations makes
        # every normalized summand equal 1, so the objective equals n
        spec = ct.gpd(0.5, 2.0)
        for n in (10, 100, 1000):
            pos = ct.edf_positions(n)
            s = ct.OrderedSample.from_values(np.asarray(ct.quantile(spec, pos)))
            obj = ct.mad_objective(s, spec, MadConfig(weighting=Weighting.NORMALIZED))
            assert obj == pytest.approx(n, abs=1e-9)

    def test_unweighted_single_observation(self):
        s = ct.OrderedSample.from_values([1.0])
        obj = ct.mad_objective(s, half_cdf, MadConfig(weighting=Weighting.UNWEIGHTED))
        assert obj == pytest.approx(np.log(0.5))

    def test_sqrt_weights_oracle(self):
        n = 100
        ranks = np.array([1.0, 37.0, 100.0])
        w = mad_weights(Weighting.SQRT_PREFERENCE, ranks, n)
        for j, i in enumerate(ranks):
            p = i / (n + 1)
            denom = i * np.log(p) + (n - i + 1) * np.log(1 - p)
            assert w[j] == pytest.approx(np.sqrt(i) / denom, rel=1e-12)
        assert np.all(w < 0)  # the normalizing denominator is negative

    def test_subrange_uses_global_ranks(self):
        spec = ct.gpd(0.5, 2.0)
        n = 200
        pos = ct.edf_positions(n)
        s = ct.OrderedSample.from_values(np.asarray(ct.quantile(spec, pos)))
        cfg = MadConfig(weighting=Weighting.NORMALIZED, rank_range=(51, 150))
        assert ct.mad_objective(s, spec, cfg) == pytest.approx(100, abs=1e-9)

    def test_invalid_rank_range(self):
        s = ct.OrderedSample.from_values([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            ct.mad_objective(s, half_cdf, MadConfig(rank_range=(0, 3)))
        with pytest.raises(ValueError):
            ct.mad_objective(s, half_cdf, MadConfig(rank_range=(2, 5)))


class TestFitMad:
    def test_gpd_recovery_normalized(self):
        spec = ct.gpd(0.65, 600.0)
        s = ct.sample(spec, 9181, seed=1)
        fit = ct.fit_mad(s, ct.Family.GPD)
        assert abs(fit.theta["gamma"] - 0.65) < 0.05
        assert abs(fit.theta["sigma"] / 600.0 - 1.0) < 0.1
        assert fit.converged

    def test_scale_equivariance(self):
        spec = ct.gpd(0.65, 600.0)
        s = ct.sample(spec, 2000, seed=2)
        s_big = ct.OrderedSample.from_values(s.values * 1000.0)
        f1 = ct.fit_mad(s, ct.Family.GPD)
        f2 = ct.fit_mad(s_big, ct.Family.GPD)
        assert f2.theta["gamma"] == pytest.approx(f1.theta["gamma"], abs=1e-6)
        assert f2.theta["sigma"] / f1.theta["sigma"] == pytest.approx(1000.0, rel=1e-6)

    def test_pareto_fixed_sigma(self):
        spec = ct.pareto(1.4, 2.0)
        s = ct.sample(spec, 4000, seed=3)
        fit = ct.fit_mad(s, ct.Family.PARETO, fixed={"sigma": 2.0})
        assert set(fit.theta) == {"alpha"}
        assert abs(fit.theta["alpha"] - 1.4) < 0.1

    def test_subrange_fit_unbiased(self):
        spec = ct.gpd(0.5, 1.0)
        cfg = MadConfig(rank_range=(201, 1800), restarts=2)
        gammas = []
        for seed in range(50):
            s = ct.sample(spec, 2000, seed=seed)
            gammas.append(ct.fit_mad(s, ct.Family.GPD, config=cfg).theta["gamma"])
        assert abs(float(np.mean(gammas)) - 0.5) < 0.06

    def test_exponential_recovery(self):
        s = ct.sample(ct.exponential(3.0), 5000, seed=4)
        fit = ct.fit_mad(s, ct.Family.EXPONENTIAL)
        assert abs(fit.theta["sigma"] - 3.0) < 0.2

    def test_unweighted_close_to_ml(self):
        spec = ct.gpd(0.65, 600.0)
        s = ct.sample(spec, 9181, seed=1)
        mad = ct.fit_mad(s, ct.Family.GPD, config=MadConfig(weighting=Weighting.UNWEIGHTED))
        ml = ct.fit_gpd_ml(s)
        assert abs(mad.theta["gamma"] - ml["gamma"]) < 0.05

    def test_no_free_parameters(self):
        s = ct.sample(ct.exponential(1.0), 50, seed=0)
        with pytest.raises(ValueError):
            ct.fit_mad(s, ct.Family.EXPONENTIAL, fixed={"sigma": 1.0})

    def test_as_dict(self):
        s = ct.sample(ct.exponential(1.0), 200, seed=0)
        d = ct.fit_mad(s, ct.Family.EXPONENTIAL).as_dict()
        assert {"theta", "objective_value", "converged", "weighting"} <= set(d)


class TestGpdMl:
    def test_recovery(self):
        s = ct.sample(ct.gpd(0.4, 2.0), 20000, seed=5)
        out = ct.fit_gpd_ml(s)
        assert abs(out["gamma"] - 0.4) < 0.03
        assert abs(out["sigma"] - 2.0) < 0.1

    def test_location_validation(self):
        s = ct.sample(ct.gpd(0.4, 2.0), 100, seed=5)
        with pytest.raises(ValueError):
            ct.fit_gpd_ml(s, loc=float(s.values[10]))


class TestHill:
    def test_two_point_oracle(self):
        # single top observation at e times the threshold gives gamma = 1
        s = ct.OrderedSample.from_values([1.0, 1.0, 2.0, 2.0 * np.e])
        out = ct.hill_estimate(s, 1)
        assert out["gamma_hat"] == pytest.approx(1.0)
        assert out["se"] == pytest.approx(1.0)
        assert out["threshold"] == 2.0

    def test_pareto_consistency(self):
        s = ct.sample(ct.pareto(2.0, 1.0), 10**5, seed=6)
        out = ct.hill_estimate(s, 10**4)
        assert abs(out["gamma_hat"] - 0.5) < 3 * out["se"]

    def test_confidence_coverage(self):
        hits = 0
        for seed in range(200):
            s = ct.sample(ct.pareto(1.0, 1.0), 500, seed=seed)
            out = ct.hill_estimate(s, 100)
            hits += abs(out["gamma_hat"] - 1.0) < 1.645 * out["se"]
        assert hits / 200 >= 0.85

    def test_k_domain(self):
        s = ct.sample(ct.pareto(1.0, 1.0), 10, seed=0)
        with pytest.raises(ValueError):
            ct.hill_estimate(s, 0)
        with pytest.raises(ValueError):
            ct.hill_estimate(s, 10)


class TestSpacings:
    def test_pareto_consistency(self):
        s = ct.sample(ct.pareto(1.25, 1.0), 5000, seed=7)
        lo = float(np.quantile(s.values, 0.90))
        out = ct.spacings_estimate(s, (lo, np.inf))
        assert abs(out["gamma_hat"] - 0.8) < 4 * out["se"]

    def test_agrees_with_hill(self):
        s = ct.sample(ct.pareto(1.0, 1.0), 10**4, seed=8)
        k = 1000
        hill = ct.hill_estimate(s, k)
        lo = float(s.values[s.n - k - 1])
        spac = ct.spacings_estimate(s, (lo, np.inf))
        assert abs(hill["gamma_hat"] - spac["gamma_hat"]) < 3 * hill["se"]

    def test_degenerate_ties(self):
        s = ct.OrderedSample.from_values([2.0, 2.0, 2.0, 2.0])
        with pytest.raises(ValueError):
            ct.spacings_estimate(s, (1.0, 3.0))

    def test_too_few_in_range(self):
        s = ct.sample(ct.pareto(1.0, 1.0), 100, seed=9)
        with pytest.raises(ValueError):
            ct.spacings_estimate(s, (1e6, 1e7))


class TestPipeline:
    def test_base_only(self):
        spec = ct.gpd(0.5, 2.0)
        s = ct.sample(spec, 3000, seed=10)
        plan = ct.PipelinePlan(base_family=ct.Family.GPD)
        out = ct.fit_pipeline(s, plan)
        assert out.model.upper is None and out.model.lower is None
        assert abs(out.model.base.params[0] - 0.5) < 0.08

    def test_full_recovery(self):
        truth = ct.AdjustedModel(
            ct.gpd(1.0, 100.0),
            ct.UpperAdjustment(ct.shifted_weibull(800.0, 2000.0, 2.0), 0.6, 800.0),
            ct.LowerAdjustment(ct.lower_gpd_adjuster(-0.7, 30.0), 30.0),
        )
        s = ct.sample_mechanism(truth, 20000, seed=11)
        plan = ct.PipelinePlan(base_family=ct.Family.GPD, x_lower=30.0, x_upper=800.0)
        out = ct.fit_pipeline(s, plan)
        assert abs(out.model.base.params[0] - 1.0) < 0.1
        assert abs(out.model.upper.p_upper - 0.6) < 0.1
        assert abs(out.lower_fit.theta["gamma_adj_l"] + 0.7) < 0.15

    def test_sparse_tail_warns_and_skips(self):
        s = ct.sample(ct.gpd(0.5, 2.0), 500, seed=12)
        plan = ct.PipelinePlan(
            base_family=ct.Family.GPD, x_upper=float(s.values[-1]) * 2
        )
        out = ct.fit_pipeline(s, plan)
        assert out.model.upper is None
        assert any("upper step skipped" in w for w in out.warnings)
