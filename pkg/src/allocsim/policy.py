"""Threshold ranking policies under capacity constraints.

The policy ranks records by a score column (predictions at deployment;
outcomes for the perfect-targeting oracle) and assigns the top
k = floor(capacity * N) slots. Ties break by canonical record order.
Records without predictions can only be reached by seeded uniform random
fill, which kicks in when labeled records cannot fill the slots.

The random number generator is numpy's PCG64 via ``default_rng``; it is
instantiated per call and never shared, so allocations are reproducible
across runs, platforms, and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, ZeroBaseline
from .population import HIGHER_IS_RISK, Mask, Population
from .utility import CRRAUtility, PartitionedUtility, ResolvedUtility, net_gains

SCORE_PREDICTION = "prediction"
SCORE_OUTCOME = "outcome"


@dataclass(frozen=True)
class SubgroupCap:
    """Local capacity: at most floor(capacity * mask.count) slots inside mask."""

    mask: Mask
    capacity: float

    def __post_init__(self):
        if not 0 < self.capacity <= 1:
            raise InvalidSpec(f"subgroup capacity {self.capacity} not in (0, 1]")

    @property
    def slots(self) -> int:
        return math.floor(self.capacity * self.mask.count)


@dataclass(frozen=True)
class Constraint:
    capacity: float
    population_size: int
    subgroup_caps: tuple[SubgroupCap, ...] = ()

    def __post_init__(self):
        if not 0 < self.capacity <= 1:
            raise InvalidSpec(f"capacity {self.capacity} not in (0, 1]")
        if self.population_size < 1:
            raise InvalidSpec("population_size must be positive")
        if self.slots < 1:
            raise InvalidSpec(
                f"capacity {self.capacity} yields zero slots for N={self.population_size}"
            )
        object.__setattr__(self, "subgroup_caps", tuple(self.subgroup_caps))
        for cap in self.subgroup_caps:
            if len(cap.mask.member) != self.population_size:
                raise InvalidSpec("subgroup cap mask length differs from population size")

    @property
    def slots(self) -> int:
        return math.floor(self.capacity * self.population_size)


@dataclass(frozen=True)
class FillLog:
    """How random fill was applied: seed used and number of filled slots."""

    seed: int
    count: int


@dataclass(frozen=True)
class Allocation:
    assigned: np.ndarray
    slots_used: int
    fill_log: FillLog
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        assigned = np.asarray(self.assigned, dtype=bool)
        assigned.setflags(write=False)
        object.__setattr__(self, "assigned", assigned)


def _rank_order(scores: np.ndarray, indices: np.ndarray, descending: bool) -> np.ndarray:
    """Indices sorted best-first with record order breaking ties."""
    key = -scores if descending else scores
    return indices[np.lexsort((indices, key))]


def _predicted_net_gain(utility: ResolvedUtility, score: float) -> float:
    spec = utility.spec
    if isinstance(spec, PartitionedUtility):
        at_risk = score >= utility.resolved_threshold if utility.at_risk_high \
            else score <= utility.resolved_threshold
        return spec.above_value if at_risk else spec.below_value
    if isinstance(spec, CRRAUtility):
        # CRRA net gain is positive for any b > 0, so the rule never stops
        # a CRRA allocation; nonpositive scores have no CRRA value anyway.
        if score <= 0:
            return spec.benefit
        e = 1.0 - spec.rho
        if abs(e) <= 1e-5:
            return math.log(score + spec.benefit) - math.log(score)
        return ((score + spec.benefit) ** e - score ** e) / e
    return spec.slope * score + spec.intercept


def allocate(
    pop: Population,
    constraint: Constraint,
    score_field: str = SCORE_PREDICTION,
    rng_seed: int = 0,
    *,
    stop_at_nonpositive: bool = False,
    utility: ResolvedUtility | None = None,
) -> Allocation:
    """Assign top-ranked records up to capacity.

    score_field "prediction" ranks labeled records and fills any remaining
    slots uniformly at random among unlabeled records; "outcome" ranks the
    whole population (the oracle sees every outcome). With
    ``stop_at_nonpositive`` (requires ``utility``) assignment stops at the
    first candidate whose net gain, evaluated at its score value, is <= 0,
    and random fill is disabled since unlabeled records have no score.

    Infeasible subgroup caps degrade to a best-effort fill recorded in
    ``warnings`` rather than raising, so parameter sweeps survive.
    """
    if constraint.population_size != pop.size:
        raise InvalidSpec("constraint sized for a different population")
    if score_field not in (SCORE_PREDICTION, SCORE_OUTCOME):
        raise InvalidSpec(f"unknown score_field {score_field!r}")
    if stop_at_nonpositive and utility is None:
        raise InvalidSpec("stop_at_nonpositive requires the resolved utility")

    n = pop.size
    k = constraint.slots
    descending = pop.outcome_direction == HIGHER_IS_RISK
    if score_field == SCORE_OUTCOME:
        candidates = np.arange(n)
        scores = pop.outcomes
    else:
        candidates = np.flatnonzero(pop.labeled)
        scores = pop.predictions
    order = _rank_order(scores[candidates], candidates, descending)

    if stop_at_nonpositive:
        gains = np.array([_predicted_net_gain(utility, float(scores[i])) for i in order])
        cut = np.argmax(gains <= 0) if (gains <= 0).any() else len(order)
        order = order[:cut]

    assigned = np.zeros(n, dtype=bool)
    warnings: list[str] = []
    caps = constraint.subgroup_caps
    if not caps:
        take = order[:k]
        assigned[take] = True
        used = len(take)
    else:
        remaining = [c.slots for c in caps]
        members = [c.mask.member for c in caps]
        used = 0
        for i in order:
            if used == k:
                break
            touching = [j for j in range(len(caps)) if members[j][i]]
            if any(remaining[j] == 0 for j in touching):
                continue
            assigned[i] = True
            used += 1
            for j in touching:
                remaining[j] -= 1

    fill_count = 0
    if score_field == SCORE_PREDICTION and used < k and not stop_at_nonpositive:
        pool = np.flatnonzero(~pop.labeled & ~assigned)
        if len(pool):
            rng = np.random.default_rng(rng_seed)
            shuffled = pool[rng.permutation(len(pool))]
            if not caps:
                take = shuffled[: k - used]
                assigned[take] = True
                fill_count = len(take)
                used += fill_count
            else:
                for i in shuffled:
                    if used == k:
                        break
                    touching = [j for j in range(len(caps)) if members[j][i]]
                    if any(remaining[j] == 0 for j in touching):
                        continue
                    assigned[i] = True
                    used += 1
                    fill_count += 1

    if used < k and not stop_at_nonpositive:
        if caps:
            warnings.append(
                f"subgroup caps left {k - used} of {k} slots unfilled (best-effort allocation)"
            )
        elif score_field == SCORE_PREDICTION and len(candidates) + fill_count < k:
            warnings.append(f"only {used} of {k} slots could be filled")

    return Allocation(
        assigned=assigned,
        slots_used=used,
        fill_log=FillLog(seed=rng_seed, count=fill_count),
        warnings=tuple(warnings),
    )


def welfare(pop: Population, alloc: Allocation, u: ResolvedUtility) -> float:
    """Per-capita expected utility (1/N) * sum_i u(w_i, a_i).

    The assigned net gains are sorted before summing: allocations with the
    same multiset of gains then produce bit-identical welfare, and a swap
    toward higher gains can never round the sum downward.
    """
    if len(alloc.assigned) != pop.size:
        raise InvalidSpec("allocation length differs from population size")
    gains = net_gains(u, pop)
    picked = np.sort(gains[alloc.assigned])
    return float(picked.sum() / pop.size)


def random_baseline(pop: Population, constraint: Constraint, u: ResolvedUtility) -> float:
    """Exact expected welfare of a uniformly random size-k allocation.

    E[welfare] = (k/N) * mean net gain; no Monte Carlo involved.
    """
    k = constraint.slots
    gains = net_gains(u, pop)
    return float((k / pop.size) * np.mean(gains))


def perfect_baseline(pop: Population, constraint: Constraint, u: ResolvedUtility) -> float:
    """Welfare of ranking by true outcomes: the oracle upper bound for
    monotone net gains."""
    alloc = allocate(pop, constraint, score_field=SCORE_OUTCOME)
    return welfare(pop, alloc, u)


def welfare_ratio(policy_welfare: float, baseline_welfare: float) -> float:
    if baseline_welfare == 0:
        raise ZeroBaseline("baseline welfare is zero; report gains as differences instead")
    return policy_welfare / baseline_welfare
