"""Utility functions u(w, a) and per-record net gains.

Three variants cover every objective the engine supports:

* ``PartitionedUtility``: u(w, 1) = above_value on the at-risk side of a
  threshold, below_value otherwise. The threshold is either an absolute
  outcome value or an empirical quantile (share ``beta`` of the population
  counted at risk).
* ``CRRAUtility``: constant relative risk aversion gain from adding a
  transfer b to pre-transfer outcome w,
  u(w, 1) = ((w + b)^(1-rho) - w^(1-rho)) / (1-rho), with the rho = 1 case
  handled as the logarithmic limit ln(w + b) - ln(w).
* ``AffineUtility``: net gain slope * w + intercept.

For all variants u(w, 0) = 0, so population welfare reduces to the mean of
assigned net gains.

Finite-sample quantile convention: resolving a quantile-mode partitioned
utility against a population flags exactly ceil(beta * N) records as at
risk, ties broken by canonical record order. Population-level evaluation
uses those flags; the scalar ``eval_utility`` uses the threshold value
comparison, which agrees whenever outcomes at the threshold are distinct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, InvalidSpec
from .population import HIGHER_IS_RISK, Population

AT_RISK_AUTO = "auto"


@dataclass(frozen=True)
class PartitionedUtility:
    """Two-valued net gain split at an outcome threshold.

    Exactly one of ``beta`` (quantile mode) or ``threshold`` (absolute mode)
    must be set. ``at_risk_side`` is "auto" (follow the population's outcome
    direction), "high", or "low".
    """

    below_value: float
    above_value: float
    beta: float | None = None
    threshold: float | None = None
    at_risk_side: str = AT_RISK_AUTO

    def __post_init__(self):
        if (self.beta is None) == (self.threshold is None):
            raise InvalidSpec("set exactly one of beta (quantile) or threshold (absolute)")
        if self.beta is not None and not 0 < self.beta < 1:
            raise InvalidSpec(f"beta {self.beta} not in (0, 1)")
        if not (math.isfinite(self.below_value) and math.isfinite(self.above_value)):
            raise InvalidSpec("partition values must be finite")
        if self.at_risk_side not in (AT_RISK_AUTO, "high", "low"):
            raise InvalidSpec(f"unknown at_risk_side {self.at_risk_side!r}")

    @property
    def harm_ratio(self) -> float:
        """h/b with h = -below_value, b = above_value."""
        if self.above_value == 0:
            raise DomainError("harm ratio undefined for above_value 0")
        return -self.below_value / self.above_value


@dataclass(frozen=True)
class CRRAUtility:
    rho: float
    benefit: float

    def __post_init__(self):
        if self.rho <= 0:
            raise InvalidSpec(f"rho must be > 0, got {self.rho}")
        if self.benefit < 0:
            raise InvalidSpec(f"benefit must be >= 0, got {self.benefit}")


@dataclass(frozen=True)
class AffineUtility:
    slope: float
    intercept: float


UtilitySpec = Union[PartitionedUtility, CRRAUtility, AffineUtility]


@dataclass(frozen=True)
class ResolvedUtility:
    """A utility spec materialized against one population.

    For partitioned utilities, ``at_risk`` holds the per-record flags under
    the exact-count quantile convention and ``resolved_threshold`` the
    marginal outcome value. Other variants resolve to themselves.
    """

    spec: UtilitySpec
    resolved_threshold: float | None = None
    at_risk: np.ndarray | None = None
    at_risk_high: bool | None = None

    def __post_init__(self):
        if self.at_risk is not None:
            flags = np.asarray(self.at_risk, dtype=bool)
            flags.setflags(write=False)
            object.__setattr__(self, "at_risk", flags)


def _at_risk_high(spec: PartitionedUtility, direction: str) -> bool:
    if spec.at_risk_side == "high":
        return True
    if spec.at_risk_side == "low":
        return False
    return direction == HIGHER_IS_RISK


def resolve(spec: UtilitySpec, pop: Population) -> ResolvedUtility:
    """Materialize thresholds (and at-risk flags) on a population."""
    if not isinstance(spec, PartitionedUtility):
        return ResolvedUtility(spec=spec)
    high = _at_risk_high(spec, pop.outcome_direction)
    outcomes = pop.outcomes
    if not np.isfinite(outcomes).all():
        raise DomainError("cannot resolve threshold: non-finite outcomes present")
    n = pop.size
    if spec.threshold is not None:
        t = float(spec.threshold)
        at_risk = outcomes >= t if high else outcomes <= t
        return ResolvedUtility(spec=spec, resolved_threshold=t, at_risk=at_risk, at_risk_high=high)
    m = math.ceil(spec.beta * n)
    idx = np.arange(n)
    order = np.lexsort((idx, -outcomes if high else outcomes))
    at_risk = np.zeros(n, dtype=bool)
    at_risk[order[:m]] = True
    t = float(outcomes[order[m - 1]])
    return ResolvedUtility(spec=spec, resolved_threshold=t, at_risk=at_risk, at_risk_high=high)


def _crra_gain(w, rho: float, b: float):
    """CRRA utility gain of a transfer b at pre-transfer outcome w.

    Vectorized over w. Requires w > 0 and w + b > 0. rho within 1e-5 of 1
    evaluates as the logarithmic limit ln(w + b) - ln(w); the power form
    cancels catastrophically there and the limit is the honest value.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0) or np.any(w + b <= 0):
        raise DomainError("CRRA requires positive outcome and post-transfer outcome")
    if abs(rho - 1.0) <= 1e-5:
        return np.log(w + b) - np.log(w)
    e = 1.0 - rho
    return ((w + b) ** e - w ** e) / e


def eval_utility(u: ResolvedUtility, w: float, a: int) -> float:
    """Scalar u(w, a). Allocation a is 0 or 1; u(w, 0) = 0 for all variants."""
    if a not in (0, 1):
        raise InvalidSpec(f"allocation must be 0 or 1, got {a}")
    if a == 0:
        if isinstance(u.spec, CRRAUtility) and w <= 0:
            raise DomainError("CRRA requires positive outcome")
        return 0.0
    return net_gain(u, w)


def net_gain(u: ResolvedUtility, w: float) -> float:
    """Scalar net gain u(w, 1) - u(w, 0)."""
    spec = u.spec
    if isinstance(spec, PartitionedUtility):
        if u.resolved_threshold is None:
            raise InvalidSpec("partitioned utility must be resolved against a population")
        at_risk = w >= u.resolved_threshold if u.at_risk_high else w <= u.resolved_threshold
        return spec.above_value if at_risk else spec.below_value
    if isinstance(spec, CRRAUtility):
        return float(_crra_gain(w, spec.rho, spec.benefit))
    return spec.slope * w + spec.intercept


def net_gains(u: ResolvedUtility, pop: Population) -> np.ndarray:
    """Per-record net gains, honoring the exact-count quantile convention."""
    spec = u.spec
    if isinstance(spec, PartitionedUtility):
        if u.at_risk is None or len(u.at_risk) != pop.size:
            raise InvalidSpec("utility was resolved against a different population")
        return np.where(u.at_risk, spec.above_value, spec.below_value)
    if isinstance(spec, CRRAUtility):
        return _crra_gain(pop.outcomes, spec.rho, spec.benefit)
    return spec.slope * pop.outcomes + spec.intercept
