import math

import numpy as np
import pytest

from allocsim.errors import InvalidSpec, ZeroBaseline
from allocsim.policy import (
    Constraint,
    SubgroupCap,
    allocate,
    perfect_baseline,
    random_baseline,
    welfare,
    welfare_ratio,
)
from allocsim.population import Mask
from allocsim.utility import CRRAUtility, PartitionedUtility, resolve

from conftest import make_population


def step(b=1.0, beta=0.15, below=0.0):
    return PartitionedUtility(below_value=below, above_value=b, beta=beta)


class TestAllocate:
    def test_top_k_by_prediction(self):
        preds = np.array([3, 9, 1, 7, 5, 10, 2, 8, 4, 6], dtype=float)
        pop = make_population(np.arange(10, dtype=float), preds)
        alloc = allocate(pop, Constraint(capacity=0.3, population_size=10))
        assert set(np.flatnonzero(alloc.assigned)) == {1, 5, 7}
        assert alloc.slots_used == 3

    def test_lower_is_risk_ranks_ascending(self):
        preds = np.array([30.0, 10.0, 20.0, 40.0])
        pop = make_population([1, 2, 3, 4], preds, direction="lower_is_risk")
        alloc = allocate(pop, Constraint(capacity=0.5, population_size=4))
        assert set(np.flatnonzero(alloc.assigned)) == {1, 2}

    def test_ties_break_by_record_order(self):
        pop = make_population([1, 2, 3, 4], [5.0, 5.0, 5.0, 5.0])
        alloc = allocate(pop, Constraint(capacity=0.5, population_size=4))
        assert list(np.flatnonzero(alloc.assigned)) == [0, 1]

    def test_random_fill_reproducible(self):
        labeled = np.zeros(10, dtype=bool)
        labeled[:3] = True
        pop = make_population(np.arange(10, dtype=float), np.arange(10, dtype=float), labeled=labeled)
        c = Constraint(capacity=0.5, population_size=10)
        a1 = allocate(pop, c, rng_seed=42)
        a2 = allocate(pop, c, rng_seed=42)
        assert (a1.assigned == a2.assigned).all()
        assert a1.assigned[:3].all()
        assert a1.fill_log.count == 2
        a3 = allocate(pop, c, rng_seed=43)
        assert a3.fill_log.count == 2

    def test_outcome_score_ranks_everyone(self):
        labeled = np.array([True, False, True, False])
        pop = make_population([1, 9, 2, 8], [1, 9, 2, 8], labeled=labeled)
        alloc = allocate(pop, Constraint(capacity=0.5, population_size=4), score_field="outcome")
        assert set(np.flatnonzero(alloc.assigned)) == {1, 3}

    def test_subgroup_cap_skips_over_cap(self):
        # top four predictions all in the capped group; cap allows one
        member = np.array([True, True, True, True, False, False])
        pop = make_population(
            np.arange(6, dtype=float), [10, 9, 8, 7, 6, 5.0]
        )
        c = Constraint(
            capacity=0.5,
            population_size=6,
            subgroup_caps=(SubgroupCap(mask=Mask(member), capacity=0.25),),
        )
        alloc = allocate(pop, c)
        assert set(np.flatnonzero(alloc.assigned)) == {0, 4, 5}
        assert not alloc.warnings

    def test_infeasible_caps_best_effort_with_warning(self):
        member = np.ones(4, dtype=bool)
        pop = make_population([1, 2, 3, 4], [4, 3, 2, 1.0])
        c = Constraint(
            capacity=1.0,
            population_size=4,
            subgroup_caps=(SubgroupCap(mask=Mask(member), capacity=0.25),),
        )
        alloc = allocate(pop, c)
        assert alloc.slots_used == 1
        assert alloc.warnings

    def test_binding_caps_never_increase_welfare(self):
        rng = np.random.default_rng(9)
        pop = make_population(rng.normal(size=40) + 5, rng.normal(size=40) + 5)
        u = resolve(step(beta=0.25), pop)
        c_free = Constraint(capacity=0.25, population_size=40)
        member = pop.predictions > np.median(pop.predictions)
        c_capped = Constraint(
            capacity=0.25,
            population_size=40,
            subgroup_caps=(SubgroupCap(mask=Mask(member), capacity=0.1),),
        )
        w_free = welfare(pop, allocate(pop, c_free), u)
        w_capped = welfare(pop, allocate(pop, c_capped), u)
        assert w_capped <= w_free

    def test_stop_at_nonpositive(self):
        # predictions put two records above the harm threshold, rest below
        pop = make_population([10, 9, 1, 2], [10, 9, 1, 2.0])
        u = resolve(PartitionedUtility(below_value=-1, above_value=1, beta=0.5), pop)
        c = Constraint(capacity=1.0, population_size=4)
        alloc = allocate(pop, c, stop_at_nonpositive=True, utility=u)
        assert set(np.flatnonzero(alloc.assigned)) == {0, 1}

    def test_capacity_validation(self):
        pop = make_population([1, 2], [1, 2])
        with pytest.raises(InvalidSpec):
            Constraint(capacity=0.0, population_size=2)
        with pytest.raises(InvalidSpec):
            Constraint(capacity=0.3, population_size=2)  # zero slots
        with pytest.raises(InvalidSpec):
            allocate(pop, Constraint(capacity=0.5, population_size=4))


class TestWelfare:
    def test_perfect_predictor_step_bound(self):
        rng = np.random.default_rng(0)
        w = np.where(rng.random(1000) < 0.15, 400.0, 0.0)
        pop = make_population(w, w.copy())
        u = resolve(step(b=1.0, beta=0.15), pop)
        c = Constraint(capacity=0.1, population_size=1000)
        value = welfare(pop, allocate(pop, c), u)
        assert value == pytest.approx(0.10, abs=2 / 1000)

    def test_empty_allocation_is_zero(self):
        pop = make_population([1, 2, 3, 4])
        u = resolve(step(beta=0.5), pop)
        alloc = allocate(pop, Constraint(capacity=0.25, population_size=4))
        zero = type(alloc)(
            assigned=np.zeros(4, dtype=bool), slots_used=0, fill_log=alloc.fill_log
        )
        assert welfare(pop, zero, u) == 0.0

    def test_reverse_ordered_predictions(self):
        # hand enumeration: policy picks the two lowest outcomes, welfare 0
        pop = make_population([1, 2, 3, 4], [4, 3, 2, 1.0])
        u = resolve(step(b=1.0, beta=0.5), pop)
        alloc = allocate(pop, Constraint(capacity=0.5, population_size=4))
        assert set(np.flatnonzero(alloc.assigned)) == {0, 1}
        assert welfare(pop, alloc, u) == 0.0


class TestBaselines:
    def test_random_step(self):
        rng = np.random.default_rng(1)
        pop = make_population(rng.normal(size=2000))
        u = resolve(step(b=1.0, beta=0.15), pop)
        c = Constraint(capacity=0.1, population_size=2000)
        expected = (200 / 2000) * (math.ceil(0.15 * 2000) / 2000)
        assert random_baseline(pop, c, u) == pytest.approx(expected, rel=1e-12)

    def test_full_capacity_equals_mean_net_gain(self):
        pop = make_population([10.0, 20.0, 30.0, 40.0])
        u = resolve(step(b=2.0, beta=0.5), pop)
        c = Constraint(capacity=1.0, population_size=4)
        assert random_baseline(pop, c, u) == pytest.approx(2.0 * 2 / 4)

    def test_harm_benefit_expectation(self):
        # expectation arithmetic over the two partition cells:
        # alpha * (beta * b - (1 - beta) * h) = 0.01 * (0.25 - 1.5) = -0.0125
        rng = np.random.default_rng(2)
        pop = make_population(rng.normal(size=400))
        u = resolve(PartitionedUtility(below_value=-2.0, above_value=1.0, beta=0.25), pop)
        c = Constraint(capacity=0.01, population_size=400)
        assert random_baseline(pop, c, u) == pytest.approx(0.01 * (0.25 * 1 - 0.75 * 2), rel=1e-12)

    def test_random_baseline_matches_monte_carlo(self):
        rng = np.random.default_rng(7)
        n, k, trials = 150, 30, 100_000
        pop = make_population(rng.lognormal(mean=7.0, sigma=0.8, size=n) + 50.0)
        u = resolve(CRRAUtility(rho=3.0, benefit=100.0), pop)
        c = Constraint(capacity=k / n, population_size=n)
        analytic = random_baseline(pop, c, u)
        from allocsim.utility import net_gains

        gains = net_gains(u, pop)
        keys = rng.random((trials, n))
        picks = np.argpartition(keys, k, axis=1)[:, :k]
        sims = gains[picks].sum(axis=1) / n
        se = sims.std(ddof=1) / math.sqrt(trials)
        assert abs(sims.mean() - analytic) < 3 * se

    def test_perfect_step_bound_exact(self):
        rng = np.random.default_rng(3)
        w = np.where(rng.random(1000) < 0.15, 400.0, 0.0)
        pop = make_population(w, rng.normal(size=1000))
        u = resolve(step(b=1.0, beta=0.15), pop)
        for alpha in (0.1, 0.2):
            c = Constraint(capacity=alpha, population_size=1000)
            k = c.slots
            m = math.ceil(0.15 * 1000)
            expected = min(k / 1000, m / 1000) * 1.0
            assert perfect_baseline(pop, c, u) == pytest.approx(expected, rel=1e-12)

    def test_crra_perfect_targets_poorest(self):
        rng = np.random.default_rng(4)
        w = rng.lognormal(mean=7.0, sigma=0.8, size=200)
        pop = make_population(w, rng.permutation(w), direction="lower_is_risk")
        u = resolve(CRRAUtility(rho=3.0, benefit=100.0), pop)
        c = Constraint(capacity=0.2, population_size=200)
        poorest = np.argsort(w, kind="stable")[:40]
        from allocsim.policy import SCORE_OUTCOME

        alloc = allocate(pop, c, score_field=SCORE_OUTCOME)
        assert set(np.flatnonzero(alloc.assigned)) == set(poorest)

    def test_predictive_welfare_between_bounds(self):
        rng = np.random.default_rng(5)
        w = np.where(rng.random(500) < 0.15, 400.0, 0.0)
        pop = make_population(w, w + rng.normal(0, 150, size=500))
        u = resolve(step(b=1.0, beta=0.15), pop)
        c = Constraint(capacity=0.1, population_size=500)
        value = welfare(pop, allocate(pop, c), u)
        assert 0.0 <= value <= perfect_baseline(pop, c, u)


class TestWelfareRatio:
    def test_case_numbers(self):
        assert welfare_ratio(0.042, 0.015) == pytest.approx(2.8)

    def test_identity(self):
        assert welfare_ratio(0.37, 0.37) == 1.0

    def test_zero_baseline(self):
        with pytest.raises(ZeroBaseline):
            welfare_ratio(1.0, 0.0)
