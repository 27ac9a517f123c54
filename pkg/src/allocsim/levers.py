"""Policy levers: parameterized transforms of the allocation problem.

Each lever rewrites one primitive (population, utility, or constraint)
and may carry a cost model. Applications are non-mutating: they return
new values and leave their inputs untouched.

Cost models price a lever's own magnitude (``lever_cost``); the budget
optimizer instead converts incremental spend into magnitude on top of a
scenario's baseline (see compare.optimize_budget), which is the natural
semantics when a planner buys additional coverage, slots, or benefit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import (
    CapacityOverflow,
    CostOutOfRange,
    InvalidSpec,
    UnlabeledInMask,
    VariantMismatch,
)
from .policy import Constraint, SubgroupCap
from .population import Mask, Population
from .utility import CRRAUtility, PartitionedUtility, UtilitySpec


# ---------------------------------------------------------------------------
# Cost models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearCost:
    """cost = unit_cost * magnitude."""

    unit_cost: float
    currency_label: str = ""

    def __post_init__(self):
        if self.unit_cost < 0:
            raise InvalidSpec("unit_cost must be >= 0")


@dataclass(frozen=True)
class PerPersonCost:
    """cost = unit_cost * number of records the lever touches."""

    unit_cost: float
    currency_label: str = ""

    def __post_init__(self):
        if self.unit_cost < 0:
            raise InvalidSpec("unit_cost must be >= 0")


@dataclass(frozen=True)
class TableCost:
    """Piecewise-linear interpolation through (magnitude, cost) points."""

    points: tuple[tuple[float, float], ...]
    currency_label: str = ""

    def __post_init__(self):
        pts = tuple((float(t), float(c)) for t, c in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise InvalidSpec("table cost needs at least two points")
        thetas = [t for t, _ in pts]
        costs = [c for _, c in pts]
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise InvalidSpec("table magnitudes must be strictly increasing")
        if any(b < a for a, b in zip(costs, costs[1:])):
            raise InvalidSpec("table costs must be nondecreasing")

    def cost_at(self, theta: float) -> float:
        thetas = [t for t, _ in self.points]
        costs = [c for _, c in self.points]
        if theta < thetas[0] or theta > thetas[-1]:
            raise CostOutOfRange(f"magnitude {theta} outside table range [{thetas[0]}, {thetas[-1]}]")
        return float(np.interp(theta, thetas, costs))


CostModel = Union[LinearCost, PerPersonCost, TableCost]


# ---------------------------------------------------------------------------
# Lever variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionImprovement:
    """Interpolate predictions toward outcomes on a subpopulation.

    p_new = p + eta * (w - p) for masked records; the masked RMSE shrinks
    by exactly the factor (1 - eta).
    """

    eta: float
    mask: Mask | None = None
    cost: CostModel | None = None

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise InvalidSpec(f"eta {self.eta} not in [0, 1]")


@dataclass(frozen=True)
class ExpandCapacity:
    delta_alpha: float
    target_mask: Mask | None = None
    cost: CostModel | None = None

    def __post_init__(self):
        if self.delta_alpha <= 0:
            raise InvalidSpec("delta_alpha must be > 0")


@dataclass(frozen=True)
class Benefit:
    """Replace the per-allocation benefit (CRRA b, partitioned above_value)."""

    new_benefit: float
    cost: CostModel | None = None

    def __post_init__(self):
        if self.new_benefit < 0:
            raise InvalidSpec("new_benefit must be >= 0")


@dataclass(frozen=True)
class HarmReduction:
    """Set the harm-to-benefit ratio of a partitioned utility, benefit fixed."""

    new_harm_ratio: float
    cost: CostModel | None = None

    def __post_init__(self):
        if self.new_harm_ratio < 0:
            raise InvalidSpec("new_harm_ratio must be >= 0")


ORDER_RANDOM = "random"
ORDER_BY_MASK = "by_mask"


@dataclass(frozen=True)
class DataLabeling:
    """Set which records have predictions available at deployment.

    Exactly floor(label_share * N) records end up labeled. Random order
    takes a prefix of one seeded permutation, so sweeps over label_share
    with a fixed seed produce nested survey sets; by_mask prioritizes
    masked records in record order.
    """

    label_share: float
    order: str = ORDER_RANDOM
    seed: int = 0
    mask: Mask | None = None
    cost: CostModel | None = None

    def __post_init__(self):
        if not 0 <= self.label_share <= 1:
            raise InvalidSpec(f"label_share {self.label_share} not in [0, 1]")
        if self.order not in (ORDER_RANDOM, ORDER_BY_MASK):
            raise InvalidSpec(f"unknown labeling order {self.order!r}")
        if self.order == ORDER_BY_MASK and self.mask is None:
            raise InvalidSpec("by_mask labeling needs a mask")


Lever = Union[PredictionImprovement, ExpandCapacity, Benefit, HarmReduction, DataLabeling]

LEVER_KINDS = {
    PredictionImprovement: "prediction_improvement",
    ExpandCapacity: "expand_capacity",
    Benefit: "benefit",
    HarmReduction: "harm_reduction",
    DataLabeling: "data_labeling",
}


# ---------------------------------------------------------------------------
# Applications
# ---------------------------------------------------------------------------

def apply_prediction_improvement(pop: Population, eta: float, mask: Mask | None = None) -> Population:
    """Return a population with masked predictions moved toward outcomes.

    eta = 0 returns predictions bit-identical to the input; eta = 1 copies
    outcomes bit-exactly so that downstream rankings coincide with the
    perfect-targeting oracle, ties included.
    """
    if not 0 <= eta <= 1:
        raise InvalidSpec(f"eta {eta} not in [0, 1]")
    member = mask.member if mask is not None else np.ones(pop.size, dtype=bool)
    if len(member) != pop.size:
        raise InvalidSpec("mask length differs from population size")
    if (member & ~pop.labeled).any():
        raise UnlabeledInMask("prediction improvement mask contains unlabeled records")
    preds = pop.predictions.copy()
    if eta == 0:
        return pop.with_predictions(preds)
    if eta == 1:
        preds[member] = pop.outcomes[member]
    else:
        preds[member] = preds[member] + eta * (pop.outcomes[member] - preds[member])
    return pop.with_predictions(preds)


def apply_capacity(c: Constraint, delta_alpha: float, target_mask: Mask | None = None) -> Constraint:
    """Raise global capacity, or a subgroup's local cap when targeted."""
    if target_mask is None:
        new_alpha = c.capacity + delta_alpha
        if new_alpha > 1 + 1e-12:
            raise CapacityOverflow(f"capacity {c.capacity} + {delta_alpha} exceeds 1")
        return replace(c, capacity=min(new_alpha, 1.0))
    for i, cap in enumerate(c.subgroup_caps):
        if np.array_equal(cap.mask.member, target_mask.member):
            raised = cap.capacity + delta_alpha
            if raised > 1 + 1e-12:
                raise CapacityOverflow("subgroup capacity exceeds 1")
            caps = list(c.subgroup_caps)
            caps[i] = SubgroupCap(mask=cap.mask, capacity=min(raised, 1.0))
            return replace(c, subgroup_caps=tuple(caps))
    if delta_alpha > 1:
        raise CapacityOverflow("subgroup capacity exceeds 1")
    return replace(
        c, subgroup_caps=c.subgroup_caps + (SubgroupCap(mask=target_mask, capacity=delta_alpha),)
    )


def apply_benefit(u: UtilitySpec, new_benefit: float) -> UtilitySpec:
    if isinstance(u, CRRAUtility):
        return replace(u, benefit=new_benefit)
    if isinstance(u, PartitionedUtility):
        return replace(u, above_value=new_benefit)
    raise VariantMismatch("benefit lever applies to CRRA or partitioned utilities only")


def apply_harm_reduction(u: UtilitySpec, new_ratio: float) -> UtilitySpec:
    if not isinstance(u, PartitionedUtility):
        raise VariantMismatch("harm reduction applies to partitioned utilities only")
    if u.below_value >= 0:
        raise VariantMismatch("harm reduction needs a utility with below_value < 0")
    if new_ratio < 0:
        raise InvalidSpec("harm ratio must be >= 0")
    return replace(u, below_value=-new_ratio * u.above_value)


def labeling_target(pop: Population, lever: DataLabeling) -> np.ndarray:
    """Boolean vector of records labeled after applying the lever."""
    n = pop.size
    count = math.floor(lever.label_share * n)
    target = np.zeros(n, dtype=bool)
    if count == 0:
        return target
    if lever.order == ORDER_RANDOM:
        perm = np.random.default_rng(lever.seed).permutation(n)
        target[perm[:count]] = True
    else:
        member = lever.mask.member
        if len(member) != n:
            raise InvalidSpec("labeling mask length differs from population size")
        priority = np.concatenate([np.flatnonzero(member), np.flatnonzero(~member)])
        target[priority[:count]] = True
    return target


def apply_labeling(pop: Population, lever: DataLabeling) -> Population:
    """Set the labeled flags to the lever's target set.

    Records flipping to labeled reveal their stored predictions; flipping
    the other way suppresses them for ranking purposes (the stored value
    is kept so one Population serves a whole share sweep). Newly labeled
    records must carry a finite stored prediction and outcome.
    """
    target = labeling_target(pop, lever)
    newly = target & ~pop.labeled
    bad = newly & ~(np.isfinite(pop.predictions) & np.isfinite(pop.outcomes))
    if bad.any():
        raise InvalidSpec(
            f"record {int(np.argmax(bad))} has no stored prediction to reveal; "
            "labeling can only reveal stored values"
        )
    return pop.with_labeled(target)


def apply_lever_components(
    pop: Population, u: UtilitySpec, c: Constraint, lever: Lever
) -> tuple[Population, UtilitySpec, Constraint]:
    """Dispatch one lever against the (population, utility, constraint) triple."""
    if isinstance(lever, PredictionImprovement):
        return apply_prediction_improvement(pop, lever.eta, lever.mask), u, c
    if isinstance(lever, ExpandCapacity):
        return pop, u, apply_capacity(c, lever.delta_alpha, lever.target_mask)
    if isinstance(lever, Benefit):
        return pop, apply_benefit(u, lever.new_benefit), c
    if isinstance(lever, HarmReduction):
        return pop, apply_harm_reduction(u, lever.new_harm_ratio), c
    if isinstance(lever, DataLabeling):
        return apply_labeling(pop, lever), u, c
    raise InvalidSpec(f"unknown lever {lever!r}")


# ---------------------------------------------------------------------------
# Costs and magnitudes
# ---------------------------------------------------------------------------

def lever_theta(lever: Lever) -> float:
    """The lever's scalar magnitude."""
    if isinstance(lever, PredictionImprovement):
        return lever.eta
    if isinstance(lever, ExpandCapacity):
        return lever.delta_alpha
    if isinstance(lever, Benefit):
        return lever.new_benefit
    if isinstance(lever, HarmReduction):
        return lever.new_harm_ratio
    return lever.label_share


def with_theta(lever: Lever, theta: float) -> Lever:
    """Copy of the lever with its magnitude replaced."""
    if isinstance(lever, PredictionImprovement):
        return replace(lever, eta=theta)
    if isinstance(lever, ExpandCapacity):
        return replace(lever, delta_alpha=theta)
    if isinstance(lever, Benefit):
        return replace(lever, new_benefit=theta)
    if isinstance(lever, HarmReduction):
        return replace(lever, new_harm_ratio=theta)
    return replace(lever, label_share=theta)


def _affected_count(lever: Lever, pop: Population) -> int:
    """Records a per-person cost model charges for."""
    if isinstance(lever, PredictionImprovement):
        member = lever.mask.member if lever.mask is not None else pop.labeled
        return 0 if lever.eta == 0 else int(member.sum())
    if isinstance(lever, ExpandCapacity):
        base = lever.target_mask.count if lever.target_mask is not None else pop.size
        return int(round(lever.delta_alpha * base))
    if isinstance(lever, DataLabeling):
        target = labeling_target(pop, lever)
        return int((target & ~pop.labeled).sum())
    raise VariantMismatch(
        f"per-person cost does not apply to {LEVER_KINDS[type(lever)]}; use linear or table"
    )


def lever_cost(lever: Lever, pop: Population) -> float:
    """Price a standalone lever with its attached cost model.

    Linear charges unit_cost per unit of magnitude; per-person charges
    unit_cost per record touched (for data labeling, only records newly
    surveyed); table interpolates and errors outside its range.
    """
    if lever.cost is None:
        raise InvalidSpec(f"lever {LEVER_KINDS[type(lever)]} has no cost model")
    model = lever.cost
    if isinstance(model, LinearCost):
        return model.unit_cost * lever_theta(lever)
    if isinstance(model, PerPersonCost):
        return model.unit_cost * _affected_count(lever, pop)
    return model.cost_at(lever_theta(lever))
