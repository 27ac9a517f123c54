import math

import numpy as np
import pytest

from allocsim.compare import (
    LeverFamily,
    LeverTemplate,
    Scenario,
    apply_lever,
    break_even,
    equivalent_cost,
    evaluate,
    evaluate_detail,
    optimize_budget,
    ratio_grid,
    rmse_parity_eta,
    welfare_curve,
    welfare_gain,
)
from allocsim.errors import InvalidSpec, NonMonotoneBenchmark
from allocsim.levers import (
    Benefit,
    DataLabeling,
    ExpandCapacity,
    HarmReduction,
    LinearCost,
    PerPersonCost,
    PredictionImprovement,
    apply_labeling,
)
from allocsim.policy import Constraint, perfect_baseline, random_baseline
from allocsim.population import covariate_mask, prediction_band_mask, rmse
from allocsim.synth import (
    SynthSpec,
    TwoPoint,
    employment_fixture,
    generate,
    oracle_budget,
    oracle_scan,
)
from allocsim.utility import CRRAUtility, PartitionedUtility, resolve

from conftest import employment_subgroup_population, make_population, reversal_population


def step_scenario(pop, alpha=0.1, beta=0.15, b=1.0, h=0.0, seed=0):
    return Scenario(
        population=pop,
        utility=PartitionedUtility(below_value=-h, above_value=b, beta=beta),
        constraint=Constraint(capacity=alpha, population_size=pop.size),
        seed=seed,
    )


class TestEvaluate:
    def test_perfect_predictor_bound(self):
        pop = generate(SynthSpec(size=10_000, outcome_dist=TwoPoint(0.15, 0.0, 400.0),
                                 noise_sigma=0.0, seed=1))
        s = step_scenario(pop)
        assert evaluate(s) == pytest.approx(0.10, abs=2 / 10_000)

    def test_zero_labeled_matches_random_in_expectation(self):
        pop = employment_fixture(seed=2, size=800)
        unlabeled = apply_labeling(pop, DataLabeling(label_share=0.0))
        u = resolve(PartitionedUtility(below_value=0, above_value=1, beta=0.15), unlabeled)
        c = Constraint(capacity=0.1, population_size=800)
        analytic = random_baseline(unlabeled, c, u)
        draws = np.array([
            evaluate(step_scenario(unlabeled, seed=seed)) for seed in range(300)
        ])
        se = draws.std(ddof=1) / math.sqrt(len(draws))
        assert abs(draws.mean() - analytic) < 3 * se

    def test_crra_zero_benefit(self):
        pop = generate(SynthSpec(size=100, outcome_dist=TwoPoint(0.5, 10.0, 20.0),
                                 noise_sigma=1.0, seed=3))
        s = Scenario(
            population=pop,
            utility=CRRAUtility(rho=3.0, benefit=0.0),
            constraint=Constraint(capacity=0.5, population_size=100),
        )
        assert evaluate(s) == 0.0

    def test_detail_fields(self):
        pop = employment_fixture(seed=4, size=1000)
        detail = evaluate_detail(step_scenario(pop))
        assert detail.slots == 100
        assert detail.random_baseline > 0
        assert detail.perfect_baseline >= detail.welfare >= 0
        assert detail.welfare_ratio == pytest.approx(detail.welfare / detail.random_baseline)


class TestWelfareGain:
    def test_identity_lever(self):
        pop = employment_fixture(seed=5, size=500)
        s = step_scenario(pop)
        assert welfare_gain(s, PredictionImprovement(eta=0.0)) == 0.0

    def test_capacity_gain_nonnegative_without_harm(self):
        # brute-force check on 20 records: welfare at both capacities by
        # direct enumeration of the top-k sets
        pop = make_population(
            [9, 1, 8, 2, 7, 3, 6, 4, 5, 0, 9, 1, 8, 2, 7, 3, 6, 4, 5, 0],
            [8, 2, 9, 1, 5, 4, 7, 3, 6, 0, 9, 2, 7, 1, 6, 3, 8, 4, 5, 0],
        )
        s = step_scenario(pop, alpha=0.2, beta=0.3)
        gain = welfare_gain(s, ExpandCapacity(delta_alpha=0.1))
        u = resolve(s.utility, pop)
        order = sorted(range(20), key=lambda i: (-pop.predictions[i], i))
        at_risk = set(np.flatnonzero(u.at_risk))
        w4 = sum(1.0 for i in order[:4] if i in at_risk) / 20
        w6 = sum(1.0 for i in order[:6] if i in at_risk) / 20
        assert gain == pytest.approx(w6 - w4, rel=1e-12)
        assert gain >= 0

    def test_capacity_reversal_under_harm(self):
        pop = reversal_population(seed=6)
        benign = step_scenario(pop, alpha=0.01, beta=0.25, h=0.0)
        harsh = step_scenario(pop, alpha=0.01, beta=0.25, b=1.0, h=3.0)
        lever = ExpandCapacity(delta_alpha=0.01)
        assert welfare_gain(benign, lever) > 0
        assert welfare_gain(harsh, lever) < 0


class TestOptimizeBudget:
    def toy(self, seed, n=200, labeled_share=0.3, alpha=0.05):
        pop = employment_fixture(seed=seed, size=n, noise_sigma=120.0)
        pop = apply_labeling(pop, DataLabeling(label_share=labeled_share, seed=seed))
        return step_scenario(pop, alpha=alpha, beta=0.5, seed=seed)

    def templates(self):
        return (
            LeverTemplate("collect", DataLabeling(label_share=0.0, seed=11,
                                                  cost=PerPersonCost(unit_cost=1.0))),
            LeverTemplate("expand", ExpandCapacity(delta_alpha=0.01,
                                                   cost=PerPersonCost(unit_cost=1.0))),
        )

    def test_zero_budget(self):
        s = self.toy(0)
        res = optimize_budget(s, self.templates(), budget=0.0, resolution=1.0)
        assert all(sp.spend == 0 for sp in res.splits)
        assert res.welfare_gain == 0.0

    def test_matches_oracle_exactly(self):
        for seed in range(6):
            s = self.toy(seed)
            templates = self.templates()
            budget = 8.0
            got = optimize_budget(s, templates, budget, resolution=1.0)
            want = oracle_budget(s, templates, budget, step=1.0)
            assert got.total_welfare == want.total_welfare
            assert [sp.spend for sp in got.splits] == [sp.spend for sp in want.splits]

    def test_three_levers_with_benefit(self):
        s = self.toy(7, n=120)
        templates = self.templates() + (
            LeverTemplate("raise", Benefit(new_benefit=0.0, cost=LinearCost(unit_cost=1.0))),
        )
        got = optimize_budget(s, templates, budget=5.0, resolution=1.0)
        want = oracle_budget(s, templates, budget=5.0, step=1.0)
        assert got.total_welfare == want.total_welfare
        assert [sp.spend for sp in got.splits] == [sp.spend for sp in want.splits]

    def test_spend_capped_at_bounds(self):
        s = self.toy(8, n=100, labeled_share=0.9)
        res = optimize_budget(
            s,
            (LeverTemplate("collect", DataLabeling(label_share=0.0, seed=1,
                                                   cost=PerPersonCost(unit_cost=1.0))),),
            budget=50.0,
            resolution=10.0,
        )
        assert all(sp.theta <= 1.0 for sp in res.splits)

    def test_worker_count_invariance(self):
        s = self.toy(9)
        templates = self.templates()
        serial = optimize_budget(s, templates, 6.0, resolution=1.0, workers=1)
        parallel = optimize_budget(s, templates, 6.0, resolution=1.0, workers=2)
        assert serial == parallel

    def test_lever_count_validated(self):
        s = self.toy(10)
        with pytest.raises(InvalidSpec):
            optimize_budget(s, (), budget=1.0)

    def test_exhausted_capacity_headroom_is_a_noop(self):
        # spend on capacity buys nothing at alpha = 1; the sweep must survive
        s = self.toy(11, alpha=1.0)
        res = optimize_budget(s, self.templates(), budget=4.0, resolution=1.0)
        want = oracle_budget(s, self.templates(), budget=4.0, step=1.0)
        assert res.total_welfare == want.total_welfare
        by_id = {sp.lever_id: sp for sp in res.splits}
        assert by_id["expand"].theta == 0.0


class TestBreakEven:
    def subgroup_scenario(self, seed=0):
        pop = employment_subgroup_population(seed=seed)
        return Scenario(
            population=pop,
            utility=PartitionedUtility(below_value=0.0, above_value=1.0, beta=0.15),
            constraint=Constraint(capacity=0.15, population_size=pop.size),
        )

    def test_zero_benchmark_gain(self):
        s = self.subgroup_scenario()
        res = break_even(
            s,
            PredictionImprovement(eta=0.0),
            np.linspace(0, 1, 11),
            PredictionImprovement(eta=0.0),  # zero-gain benchmark
        )
        assert res.attained and res.theta_star == 0.0

    def test_unattainable(self):
        s = self.subgroup_scenario()
        big = perfect_baseline(
            s.population, s.constraint, resolve(s.utility, s.population)
        )
        res = break_even(
            s,
            PredictionImprovement(eta=0.0),
            [0.0, 0.5, 1.0],
            Benefit(new_benefit=10.0),  # scales gains far beyond eta reach
        )
        assert not res.attained and res.theta_star is None
        assert len(res.gain_curve) == 3

    def test_matches_fine_scan_oracle(self):
        s = self.subgroup_scenario()
        mask = covariate_mask(s.population, "age > 35 AND last_job IS MISSING")
        hours = mask.count * 1.0
        benchmark = ExpandCapacity(delta_alpha=(hours / 4.0) / s.population.size)
        coarse = np.round(np.linspace(0, 1, 21), 10)
        res = break_even(s, PredictionImprovement(eta=0.0, mask=mask), coarse, benchmark)
        base = evaluate(s)

        def gain(eta):
            return evaluate(apply_lever(s, PredictionImprovement(eta=eta, mask=mask))) - base

        fine = np.round(np.linspace(0, 1, 201), 10)
        want = oracle_scan(gain, fine, res.benchmark_gain)
        assert res.attained
        assert want is not None
        assert abs(res.theta_star - want) <= 0.05 + 1e-12

    def test_band_break_even_below_full_subgroup(self):
        s = self.subgroup_scenario()
        pop = s.population
        sub = covariate_mask(pop, "age > 35 AND last_job IS MISSING")
        band = prediction_band_mask(pop, cutoff_rank=s.constraint.slots, bandwidth=0.10)
        both = sub & band
        grid = np.round(np.linspace(0, 1, 101), 10)

        res_full = break_even(
            s, PredictionImprovement(eta=0.0, mask=sub), grid,
            ExpandCapacity(delta_alpha=(sub.count / 4.0) / pop.size),
        )
        res_band = break_even(
            s, PredictionImprovement(eta=0.0, mask=both), grid,
            ExpandCapacity(delta_alpha=max(both.count / 4.0, 1.0) / pop.size),
        )
        assert res_full.attained and res_band.attained
        assert res_band.theta_star < res_full.theta_star

    def test_parity_eta_identity(self):
        pop = employment_subgroup_population(seed=3)
        mask = covariate_mask(pop, "age > 35 AND last_job IS MISSING")
        eta = rmse_parity_eta(pop, mask)
        assert 0 < eta < 1
        from allocsim.levers import apply_prediction_improvement

        improved = apply_prediction_improvement(pop, eta, mask)
        assert rmse(improved, mask) == pytest.approx(rmse(pop), rel=1e-9)


class TestEquivalentCost:
    def scenario(self, seed=0):
        pop = employment_subgroup_population(seed=seed)
        return Scenario(
            population=pop,
            utility=PartitionedUtility(below_value=0.0, above_value=1.0, beta=0.15),
            constraint=Constraint(capacity=0.15, population_size=pop.size),
        )

    def family(self, s):
        return LeverFamily(
            prototype=ExpandCapacity(delta_alpha=0.01, cost=LinearCost(unit_cost=4.0 * s.population.size)),
            theta_min=0.0001,
            theta_max=0.5,
        )

    def test_zero_gain_costs_nothing(self):
        s = self.scenario()
        res = equivalent_cost(s, PredictionImprovement(eta=0.0), self.family(s))
        assert res.attained
        assert res.cost == pytest.approx(0.0, abs=4.0 * s.population.size * 2e-4)

    def test_bisection_matches_scan_oracle(self):
        s = self.scenario()
        mask = covariate_mask(s.population, "age > 35 AND last_job IS MISSING")
        lever = PredictionImprovement(eta=0.35, mask=mask)
        fam = self.family(s)
        res = equivalent_cost(s, lever, fam)
        assert res.attained
        base = evaluate(s)
        target = welfare_gain(s, lever, baseline=base)
        thetas = np.linspace(fam.theta_min, fam.theta_max, 10_000)

        def gain(theta):
            return welfare_gain(s, fam.lever(theta), baseline=base)

        want = oracle_scan(gain, thetas, target)
        step = thetas[1] - thetas[0]
        assert want is not None
        assert abs(res.theta - want) <= step + 1e-12

    def test_range_exceeded(self):
        s = self.scenario()
        fam = LeverFamily(
            prototype=ExpandCapacity(delta_alpha=0.01, cost=LinearCost(1.0)),
            theta_min=0.0001,
            theta_max=0.001,
        )
        res = equivalent_cost(s, PredictionImprovement(eta=1.0), fam)
        assert not res.attained and res.cost is None

    def test_non_monotone_benchmark_rejected(self):
        pop = employment_fixture(seed=11, size=2000, noise_sigma=300.0)
        s = step_scenario(pop, alpha=0.01, beta=0.25, b=1.0, h=3.0)
        fam = LeverFamily(
            prototype=ExpandCapacity(delta_alpha=0.01, cost=LinearCost(1.0)),
            theta_min=0.001,
            theta_max=0.3,
        )
        with pytest.raises(NonMonotoneBenchmark):
            equivalent_cost(s, PredictionImprovement(eta=0.5), fam)


class TestRatioGrid:
    def scenario(self):
        pop = reversal_population(seed=12, n=2000)
        return step_scenario(pop, alpha=0.01, beta=0.25, b=1.0, h=2.0)

    def test_identical_levers_diagonal_one(self):
        s = self.scenario()
        grid = [0.2, 0.5, 0.9]
        res = ratio_grid(s, PredictionImprovement(eta=0.0), grid,
                         PredictionImprovement(eta=0.0), grid)
        for i in range(3):
            if res.defined[i, i]:
                assert res.ratios[i, i] == pytest.approx(1.0, rel=1e-12)

    def test_reciprocity(self):
        s = self.scenario()
        grid_a = [0.2, 0.5, 0.9]
        grid_b = [0.5, 1.0, 1.5]
        ab = ratio_grid(s, PredictionImprovement(eta=0.0), grid_a,
                        HarmReduction(new_harm_ratio=0.0), grid_b)
        ba = ratio_grid(s, HarmReduction(new_harm_ratio=0.0), grid_b,
                        PredictionImprovement(eta=0.0), grid_a)
        for i in range(3):
            for j in range(3):
                if ab.defined[i, j] and ba.defined[j, i]:
                    assert ab.ratios[i, j] * ba.ratios[j, i] == pytest.approx(1.0, rel=1e-12)

    def test_nonpositive_denominator_flagged(self):
        s = self.scenario()
        # raising the harm ratio to or past its current value gains <= 0
        res = ratio_grid(s, PredictionImprovement(eta=0.0), [0.5],
                         HarmReduction(new_harm_ratio=0.0), [2.0, 3.0])
        assert not res.defined.any()
        assert np.isnan(res.ratios).all()

    def test_truncation_preserves_raw(self):
        s = self.scenario()
        res = ratio_grid(s, PredictionImprovement(eta=0.0), [0.9],
                         HarmReduction(new_harm_ratio=0.0), [1.9])
        clipped = res.truncated()
        assert clipped.shape == res.ratios.shape
        lo, hi = res.truncation
        defined = res.defined
        assert (clipped[defined] >= lo).all() and (clipped[defined] <= hi).all()


class TestWelfareCurve:
    def test_eta_curve_endpoint(self):
        pop = employment_fixture(seed=13, size=2000)
        s = step_scenario(pop)
        pts = welfare_curve(s, PredictionImprovement(eta=0.0), [0.0, 0.5, 1.0])
        assert len(pts) == 3
        gains = [p.gain for p in pts]
        assert gains == sorted(gains)
        perfect = perfect_baseline(pop, s.constraint, resolve(s.utility, pop))
        assert pts[-1].welfare == perfect
        assert pts[0].gain == 0.0

    def test_per_point_errors_nonfatal(self):
        pop = employment_fixture(seed=14, size=500)
        s = step_scenario(pop, alpha=0.5)
        pts = welfare_curve(s, ExpandCapacity(delta_alpha=0.1), [0.1, 0.4, 0.7])
        assert pts[0].error is None
        assert pts[2].error is not None and "CapacityOverflow" in pts[2].error
        assert math.isnan(pts[2].welfare)

    def test_unsorted_grid_rejected(self):
        pop = employment_fixture(seed=15, size=300)
        s = step_scenario(pop)
        with pytest.raises(InvalidSpec):
            welfare_curve(s, PredictionImprovement(eta=0.0), [0.5, 0.1])

    def test_worker_invariance(self):
        pop = employment_fixture(seed=16, size=800)
        s = step_scenario(pop)
        grid = list(np.linspace(0, 1, 7))
        assert welfare_curve(s, PredictionImprovement(eta=0.0), grid, workers=1) == \
            welfare_curve(s, PredictionImprovement(eta=0.0), grid, workers=2)


class TestMonotoneImprovement:
    def test_uniform_improvement_nondecreasing_all_utilities(self):
        grid = np.round(np.linspace(0, 1, 21), 10)
        for seed in range(5):
            pop = employment_fixture(seed=seed, size=2000)
            crra_pop = generate(SynthSpec(size=2000,
                                          outcome_dist=TwoPoint(0.3, 200.0, 2000.0),
                                          noise_sigma=400.0, direction="lower_is_risk",
                                          seed=seed))
            cases = [
                step_scenario(pop, alpha=0.1, beta=0.15),
                step_scenario(pop, alpha=0.1, beta=0.15, b=1.0, h=2.0),
                Scenario(population=crra_pop,
                         utility=CRRAUtility(rho=3.0, benefit=100.0),
                         constraint=Constraint(capacity=0.1, population_size=2000)),
            ]
            for s in cases:
                last = -math.inf
                for eta in grid:
                    w = evaluate(apply_lever(s, PredictionImprovement(eta=float(eta))))
                    assert w >= last
                    last = w
