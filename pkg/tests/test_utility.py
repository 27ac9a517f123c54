import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from allocsim.errors import DomainError, InvalidSpec
from allocsim.utility import (
    AffineUtility,
    CRRAUtility,
    PartitionedUtility,
    eval_utility,
    net_gain,
    net_gains,
    resolve,
)

from conftest import make_population


def crra_gain_by_quadrature(w: float, b: float, rho: float, n: int = 200_000) -> float:
    """Independent oracle: integrate marginal utility x^(-rho) from w to w+b."""
    xs = np.linspace(w, w + b, n + 1)
    return float(np.trapezoid(xs ** (-rho), xs))


class TestResolve:
    def test_quantile_top_share(self):
        pop = make_population(np.arange(1, 11, dtype=float))
        r = resolve(PartitionedUtility(below_value=0, above_value=1, beta=0.3), pop)
        assert r.resolved_threshold == 8
        assert list(np.flatnonzero(r.at_risk)) == [7, 8, 9]

    def test_absolute_passthrough(self):
        pop = make_population(np.arange(1, 11, dtype=float))
        r = resolve(PartitionedUtility(below_value=0, above_value=1, threshold=5.0), pop)
        assert r.resolved_threshold == 5.0

    def test_mean_threshold_marks_below_average_poor(self):
        rng = np.random.default_rng(11)
        w = rng.lognormal(mean=7.0, sigma=0.8, size=4694)
        pop = make_population(w, direction="lower_is_risk")
        wbar = float(np.mean(w))
        r = resolve(PartitionedUtility(below_value=0, above_value=1, threshold=wbar), pop)
        assert r.resolved_threshold == wbar
        assert (r.at_risk == (w <= wbar)).all()

    def test_exact_count_under_ties(self):
        # six tied outcomes, beta picks exactly ceil(0.5 * 6) = 3, earliest records first
        pop = make_population([5.0] * 6)
        r = resolve(PartitionedUtility(below_value=0, above_value=1, beta=0.5), pop)
        assert list(np.flatnonzero(r.at_risk)) == [0, 1, 2]

    def test_lower_is_risk_quantile(self):
        pop = make_population([10, 20, 30, 40], direction="lower_is_risk")
        r = resolve(PartitionedUtility(below_value=0, above_value=1, beta=0.5), pop)
        assert list(np.flatnonzero(r.at_risk)) == [0, 1]
        assert r.resolved_threshold == 20


class TestEvalUtility:
    def test_crra_hand_value(self):
        # ((200)^-2 - (100)^-2) / (-2) = 3.75e-5, cross-checked by quadrature
        r = resolve(CRRAUtility(rho=3.0, benefit=100.0), make_population([100.0]))
        value = eval_utility(r, 100.0, 1)
        assert value == pytest.approx(3.75e-5, rel=1e-12)
        assert value == pytest.approx(crra_gain_by_quadrature(100.0, 100.0, 3.0), rel=1e-9)

    def test_allocation_zero_is_zero(self):
        pop = make_population([3.0, 4.0])
        for spec in (
            PartitionedUtility(below_value=-2, above_value=1, beta=0.5),
            CRRAUtility(rho=3.0, benefit=50.0),
            AffineUtility(slope=2.0, intercept=1.0),
        ):
            assert eval_utility(resolve(spec, pop), 3.0, 0) == 0.0

    def test_partitioned_harm_value(self):
        pop = make_population([1.0, 10.0])
        r = resolve(PartitionedUtility(below_value=-2, above_value=1, beta=0.5), pop)
        assert eval_utility(r, 1.0, 1) == -2.0
        assert eval_utility(r, 10.0, 1) == 1.0

    def test_crra_domain_error(self):
        r = resolve(CRRAUtility(rho=2.0, benefit=1.0), make_population([1.0]))
        with pytest.raises(DomainError):
            net_gain(r, -1.0)

    def test_affine(self):
        r = resolve(AffineUtility(slope=1.0, intercept=-5.0), make_population([1.0]))
        assert net_gain(r, 3.0) == -2.0


class TestNetGain:
    def test_step_at_risk(self):
        pop = make_population([1.0, 10.0])
        r = resolve(PartitionedUtility(below_value=0, above_value=2.5, beta=0.5), pop)
        assert net_gain(r, 10.0) == 2.5

    def test_crra_equals_eval(self):
        r = resolve(CRRAUtility(rho=3.0, benefit=100.0), make_population([100.0]))
        assert net_gain(r, 100.0) == eval_utility(r, 100.0, 1)

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(10.0, 1e5),
        st.floats(0.01, 1e3),
        st.floats(0.1, 6.0),
    )
    def test_crra_matches_quadrature(self, w, b, rho):
        # the 1e-5 neighborhood of rho = 1 evaluates as the log limit by
        # design; quadrature checks the power branch
        assume(abs(rho - 1.0) > 1e-4)
        r = resolve(CRRAUtility(rho=rho, benefit=b), make_population([w]))
        assert net_gain(r, w) == pytest.approx(crra_gain_by_quadrature(w, b, rho), rel=1e-6)

    def test_crra_positive_and_decreasing(self):
        ws = np.linspace(50.0, 5000.0, 200)
        r = resolve(CRRAUtility(rho=3.0, benefit=100.0), make_population(ws))
        gains = net_gains(r, make_population(ws))
        assert (gains > 0).all()
        assert (np.diff(gains) < 0).all()

    def test_log_limit_continuity(self):
        w, b = 120.0, 80.0
        pop = make_population([w])
        near = net_gain(resolve(CRRAUtility(rho=0.999999, benefit=b), pop), w)
        at_limit = net_gain(resolve(CRRAUtility(rho=1.0, benefit=b), pop), w)
        assert math.isclose(near, at_limit, rel_tol=1e-6)
        assert at_limit == pytest.approx(math.log(w + b) - math.log(w), rel=1e-12)

    def test_partitioned_two_values_only(self):
        rng = np.random.default_rng(5)
        pop = make_population(rng.normal(size=500))
        r = resolve(PartitionedUtility(below_value=-1.5, above_value=2.0, beta=0.25), pop)
        assert set(np.unique(net_gains(r, pop))) == {-1.5, 2.0}


class TestSpecValidation:
    def test_exactly_one_threshold_mode(self):
        with pytest.raises(InvalidSpec):
            PartitionedUtility(below_value=0, above_value=1)
        with pytest.raises(InvalidSpec):
            PartitionedUtility(below_value=0, above_value=1, beta=0.5, threshold=3.0)

    def test_beta_range(self):
        with pytest.raises(InvalidSpec):
            PartitionedUtility(below_value=0, above_value=1, beta=1.5)

    def test_crra_params(self):
        with pytest.raises(InvalidSpec):
            CRRAUtility(rho=0.0, benefit=1.0)
        with pytest.raises(InvalidSpec):
            CRRAUtility(rho=2.0, benefit=-1.0)
