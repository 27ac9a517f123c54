"""Synthetic populations and brute-force reference oracles.

The case-study datasets behind this engine are restricted or external,
so verification runs on seeded synthetic fixtures. All randomness flows
through numpy's ``default_rng`` (PCG64), a named, platform-stable
generator; the same spec and seed always reproduce the same population
bit-for-bit.

The oracles here are deliberately naive reimplementations used only by
tests: they share nothing with the operations they check beyond the
scenario evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence, Union

import numpy as np

from .compare import LeverTemplate, Scenario, apply_lever, evaluate
from .errors import InvalidSpec, TooLargeToEnumerate
from .levers import (
    Benefit,
    DataLabeling,
    ExpandCapacity,
    HarmReduction,
    LinearCost,
    PerPersonCost,
    PredictionImprovement,
    with_theta,
)
from .population import HIGHER_IS_RISK, LOWER_IS_RISK, Population
from .utility import CRRAUtility


@dataclass(frozen=True)
class Lognormal:
    """exp(Normal(mu, sigma)) outcomes."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidSpec("sigma must be > 0")

    @staticmethod
    def with_mean(mean: float, sigma: float) -> "Lognormal":
        """Parameterize by the distribution mean instead of the log-mean."""
        return Lognormal(mu=math.log(mean) - 0.5 * sigma * sigma, sigma=sigma)


@dataclass(frozen=True)
class Pareto:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise InvalidSpec("shape and scale must be > 0")


@dataclass(frozen=True)
class TwoPoint:
    """Bernoulli mixture: outcome ``high`` with probability share_at_risk."""

    share_at_risk: float
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.share_at_risk < 1:
            raise InvalidSpec("share_at_risk must be in (0, 1)")


OutcomeDist = Union[Lognormal, Pareto, TwoPoint]


@dataclass(frozen=True)
class SynthSpec:
    size: int
    outcome_dist: OutcomeDist
    noise_sigma: float
    noise_on_log: bool = False
    direction: str = HIGHER_IS_RISK
    seed: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise InvalidSpec("size must be >= 2")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")


def generate(spec: SynthSpec) -> Population:
    """Draw an all-labeled population: i.i.d. outcomes plus prediction noise.

    noise_sigma = 0 copies outcomes into predictions bit-exactly. Log
    noise multiplies outcomes by exp(Normal(0, sigma)) and requires a
    positive-valued outcome distribution.
    """
    rng = np.random.default_rng(spec.seed)
    dist = spec.outcome_dist
    if isinstance(dist, Lognormal):
        outcomes = rng.lognormal(mean=dist.mu, sigma=dist.sigma, size=spec.size)
    elif isinstance(dist, Pareto):
        outcomes = dist.scale * (1.0 + rng.pareto(dist.shape, size=spec.size))
    else:
        at_risk = rng.random(spec.size) < dist.share_at_risk
        outcomes = np.where(at_risk, dist.high, dist.low).astype(float)

    if spec.noise_sigma == 0:
        predictions = outcomes.copy()
    elif spec.noise_on_log:
        if np.any(outcomes <= 0):
            raise InvalidSpec("log-noise needs strictly positive outcomes")
        predictions = np.exp(np.log(outcomes) + rng.normal(0.0, spec.noise_sigma, spec.size))
    else:
        predictions = outcomes + rng.normal(0.0, spec.noise_sigma, spec.size)

    return Population(
        ids=tuple(f"s{i}" for i in range(spec.size)),
        outcomes=outcomes,
        predictions=predictions,
        labeled=np.ones(spec.size, dtype=bool),
        outcome_direction=spec.direction,
        metadata={"source": "synthetic", "seed": str(spec.seed)},
    )


def employment_fixture(seed: int = 0, size: int = 10_000, noise_sigma: float = 180.0) -> Population:
    """Desk-scale stand-in for an unemployment-duration population:
    15% of records at outcome 400, the rest at 0, higher is risk."""
    return generate(
        SynthSpec(
            size=size,
            outcome_dist=TwoPoint(share_at_risk=0.15, low=0.0, high=400.0),
            noise_sigma=noise_sigma,
            direction=HIGHER_IS_RISK,
            seed=seed,
        )
    )


def poverty_fixture(seed: int = 0, size: int = 10_000, noise_sigma: float = 0.5) -> Population:
    """Desk-scale consumption population: lognormal with mean 1250 currency
    units and log-sd 0.8, noisy log predictions, lower is risk."""
    return generate(
        SynthSpec(
            size=size,
            outcome_dist=Lognormal.with_mean(1250.0, 0.8),
            noise_sigma=noise_sigma,
            noise_on_log=True,
            direction=LOWER_IS_RISK,
            seed=seed,
        )
    )


# ---------------------------------------------------------------------------
# Reference oracles
# ---------------------------------------------------------------------------

def _oracle_theta(template: LeverTemplate, spend: float, s: Scenario) -> float:
    """Independent spend-to-magnitude conversion for the oracle.

    Deliberately duplicates the contract arithmetic (linear and per-person
    cost models only) instead of calling the optimizer's converter.
    """
    proto = template.prototype
    model = proto.cost
    n = s.population.size
    if isinstance(model, LinearCost):
        increment = spend / model.unit_cost
    elif isinstance(model, PerPersonCost):
        if isinstance(proto, DataLabeling):
            increment = (spend / model.unit_cost) / n
        elif isinstance(proto, ExpandCapacity):
            base = proto.target_mask.count if proto.target_mask is not None else n
            increment = (spend / model.unit_cost) / base
        else:
            raise InvalidSpec("oracle supports per-person cost on labeling/capacity only")
    else:
        raise InvalidSpec("oracle supports linear and per-person cost models only")
    if isinstance(proto, DataLabeling):
        return min(1.0, s.population.labeled_share() + increment)
    if isinstance(proto, ExpandCapacity):
        if proto.target_mask is not None:
            return increment
        return min(1.0 - s.constraint.capacity, increment)
    if isinstance(proto, Benefit):
        u = s.utility
        base = u.benefit if isinstance(u, CRRAUtility) else u.above_value
        return base + increment
    if isinstance(proto, HarmReduction):
        return max(0.0, s.utility.harm_ratio - increment)
    return min(1.0, increment)


_ORACLE_ORDER = {DataLabeling: 0, PredictionImprovement: 1, Benefit: 2, HarmReduction: 3,
                 ExpandCapacity: 4}


def _oracle_split_welfare(s: Scenario, templates: Sequence[LeverTemplate],
                          spends: Sequence[float]) -> float:
    staged = []
    for idx, (t, spend) in enumerate(zip(templates, spends)):
        if spend == 0:
            continue
        theta = _oracle_theta(t, spend, s)
        if isinstance(t.prototype, ExpandCapacity) and theta <= 0:
            continue
        staged.append((_ORACLE_ORDER[type(t.prototype)], idx, with_theta(t.prototype, theta)))
    out = s
    for _, _, lever in sorted(staged):
        out = apply_lever(out, lever)
    return evaluate(out)


def oracle_budget(
    s: Scenario,
    templates: Sequence[LeverTemplate],
    budget: float,
    step: float = 1.0,
):
    """Exact budget-split argmax by plain enumeration of the spend grid.

    Same tie rule as the optimizer (welfare first, then lexicographically
    smaller spends); refuses instances past 10^6 cells.
    """
    from .compare import BudgetAllocationResult, LeverSpend

    n_steps = int(math.floor(budget / step + 1e-9))
    n_cells_bound = (n_steps + 1) ** len(templates)
    if n_cells_bound > 1_000_000:
        raise TooLargeToEnumerate(f"{n_cells_bound} cells exceed the enumeration bound")

    best_spends: tuple[float, ...] | None = None
    best_welfare = -math.inf
    baseline = evaluate(s)
    for steps in product(range(n_steps + 1), repeat=len(templates)):
        if sum(steps) > n_steps:
            continue
        spends = tuple(i * step for i in steps)
        w = _oracle_split_welfare(s, templates, spends)
        if w > best_welfare or (w == best_welfare and (best_spends is None or spends < best_spends)):
            best_welfare = w
            best_spends = spends
    assert best_spends is not None
    splits = tuple(
        LeverSpend(t.lever_id, spend, _oracle_theta(t, spend, s))
        for t, spend in zip(templates, best_spends)
    )
    return BudgetAllocationResult(
        splits=splits,
        total_welfare=best_welfare,
        welfare_gain=best_welfare - baseline,
        baseline_welfare=baseline,
        grid_resolution=step,
    )


def oracle_scan(gain_fn, thetas: Sequence[float], target: float) -> float | None:
    """First grid magnitude whose gain reaches the target; None if none does."""
    for theta in thetas:
        if gain_fn(float(theta)) >= target:
            return float(theta)
    return None
