"""Scenario evaluation and the three lever-comparison analyses.

Q1 ``optimize_budget``: exhaustive grid search over the spend simplex,
converting spend to lever magnitude per cost model. Welfare is a step
function of spend (slots and labels are discrete), so grid enumeration is
the correct tool; resolution is the caller's knob.

Q2 ``break_even`` / ``equivalent_cost``: the magnitude one lever needs to
match a benchmark's welfare gain. Break-even scans first crossing on a
grid (subgroup-masked gains need not be monotone); equivalent-cost may
bisect because it validates benchmark monotonicity by sampling first.

Q3 ``ratio_grid``: the willingness-to-pay ratio gain_A / gain_B over a
magnitude grid, with nonpositive denominators flagged undefined.

All gains within one analysis are measured against a single frozen
baseline evaluation. Grid cells are pure and independent; ``workers``
splits them over processes with results identical to the serial order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AllocsimError,
    AnalysisError,
    InvalidSpec,
    NonInvertibleCost,
    NonMonotoneBenchmark,
)
from .levers import (
    Benefit,
    DataLabeling,
    ExpandCapacity,
    HarmReduction,
    Lever,
    LinearCost,
    PerPersonCost,
    PredictionImprovement,
    TableCost,
    LEVER_KINDS,
    apply_lever_components,
    lever_cost,
    with_theta,
)
from .policy import Constraint, allocate, perfect_baseline, random_baseline, welfare
from .population import Mask, Population, rmse
from .utility import CRRAUtility, PartitionedUtility, UtilitySpec, resolve


@dataclass(frozen=True)
class Scenario:
    """One allocation problem: population, objective, capacity, policy options."""

    population: Population
    utility: UtilitySpec
    constraint: Constraint
    seed: int = 0
    stop_at_nonpositive: bool = False

    def __post_init__(self):
        if self.constraint.population_size != self.population.size:
            raise InvalidSpec("constraint sized for a different population")


@dataclass(frozen=True)
class EvaluationResult:
    welfare: float
    random_baseline: float
    perfect_baseline: float
    welfare_ratio: float | None
    slots: int
    slots_used: int
    fill_count: int
    resolved_threshold: float | None
    warnings: tuple[str, ...]


def apply_lever(s: Scenario, lever: Lever) -> Scenario:
    pop, u, c = apply_lever_components(s.population, s.utility, s.constraint, lever)
    return replace(s, population=pop, utility=u, constraint=c)


def evaluate(s: Scenario) -> float:
    """Per-capita welfare of the prediction-ranked allocation."""
    u = resolve(s.utility, s.population)
    alloc = allocate(
        s.population,
        s.constraint,
        rng_seed=s.seed,
        stop_at_nonpositive=s.stop_at_nonpositive,
        utility=u,
    )
    return welfare(s.population, alloc, u)


def evaluate_detail(s: Scenario) -> EvaluationResult:
    """Welfare plus the analytic baselines, for reporting surfaces."""
    u = resolve(s.utility, s.population)
    alloc = allocate(
        s.population,
        s.constraint,
        rng_seed=s.seed,
        stop_at_nonpositive=s.stop_at_nonpositive,
        utility=u,
    )
    w = welfare(s.population, alloc, u)
    rnd = random_baseline(s.population, s.constraint, u)
    perf = perfect_baseline(s.population, s.constraint, u)
    ratio = None if rnd == 0 else w / rnd
    return EvaluationResult(
        welfare=w,
        random_baseline=rnd,
        perfect_baseline=perf,
        welfare_ratio=ratio,
        slots=s.constraint.slots,
        slots_used=alloc.slots_used,
        fill_count=alloc.fill_log.count,
        resolved_threshold=u.resolved_threshold,
        warnings=alloc.warnings,
    )


def welfare_gain(s: Scenario, lever: Lever, baseline: float | None = None) -> float:
    """evaluate(lever applied) - evaluate(s); pass ``baseline`` to reuse one."""
    base = evaluate(s) if baseline is None else baseline
    return evaluate(apply_lever(s, lever)) - base


def rmse_parity_eta(pop: Population, mask: Mask) -> float:
    """Improvement magnitude bringing masked RMSE down to the population's.

    Solves (1 - eta) * rmse(mask) = rmse(population), clamped to [0, 1];
    0 means the subgroup already predicts at least as well as average.
    """
    overall = rmse(pop)
    sub = rmse(pop, mask)
    if sub == 0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - overall / sub))


# ---------------------------------------------------------------------------
# Parallel cell evaluation
# ---------------------------------------------------------------------------

def _map_cells(fn: Callable, items: Sequence, workers: int) -> list:
    """Apply fn to items, optionally across processes, preserving order.

    Results are identical regardless of worker count: cells are pure and
    reassembled in submission order.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, math.ceil(len(items) / (workers * 4)))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _curve_cell(theta: float, *, scenario: Scenario, prototype: Lever, baseline: float):
    try:
        w = evaluate(apply_lever(scenario, with_theta(prototype, theta)))
        return (theta, w, w - baseline, None)
    except AllocsimError as err:
        return (theta, math.nan, math.nan, f"{type(err).__name__}: {err}")


@dataclass(frozen=True)
class CurvePoint:
    theta: float
    welfare: float
    gain: float
    error: str | None = None


def welfare_curve(
    s: Scenario, prototype: Lever, thetas: Sequence[float], *, workers: int = 1
) -> tuple[CurvePoint, ...]:
    """Welfare and gain per magnitude; per-point errors recorded, sweep continues."""
    thetas = [float(t) for t in thetas]
    if sorted(thetas) != thetas:
        raise InvalidSpec("magnitude grid must be sorted ascending")
    baseline = evaluate(s)
    fn = partial(_curve_cell, scenario=s, prototype=prototype, baseline=baseline)
    return tuple(CurvePoint(*row) for row in _map_cells(fn, thetas, workers))


# ---------------------------------------------------------------------------
# Q1: budget optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeverTemplate:
    """A lever whose magnitude is purchased with budget.

    ``prototype`` carries masks, seeds, and the cost model; its own
    magnitude is ignored. Spend converts to magnitude on top of the
    scenario baseline: labeling and capacity buy shares/slots, benefit
    buys increments, harm reduction buys ratio decrements, prediction
    improvement buys eta directly.
    """

    lever_id: str
    prototype: Lever

    def __post_init__(self):
        if self.prototype.cost is None:
            raise InvalidSpec(f"lever template {self.lever_id!r} needs a cost model")


def _invert_table(model: TableCost, spend: float) -> float:
    costs = [c for _, c in model.points]
    thetas = [t for t, _ in model.points]
    if any(b <= a for a, b in zip(costs, costs[1:])):
        raise NonInvertibleCost("table costs must be strictly increasing to invert spend")
    if spend < costs[0] or spend > costs[-1]:
        raise NonInvertibleCost(f"spend {spend} outside table cost range")
    return float(np.interp(spend, costs, thetas))


def theta_from_spend(template: LeverTemplate, spend: float, s: Scenario) -> float:
    """Magnitude reached by spending ``spend`` on top of the scenario baseline."""
    proto = template.prototype
    model = proto.cost
    n = s.population.size
    if isinstance(model, TableCost):
        increment = _invert_table(model, spend)
    elif isinstance(model, LinearCost):
        if model.unit_cost == 0:
            raise NonInvertibleCost(f"{template.lever_id}: zero unit cost")
        increment = spend / model.unit_cost
    elif isinstance(model, PerPersonCost):
        if model.unit_cost == 0:
            raise NonInvertibleCost(f"{template.lever_id}: zero unit cost")
        persons = spend / model.unit_cost
        if isinstance(proto, DataLabeling):
            increment = persons / n
        elif isinstance(proto, ExpandCapacity):
            base = proto.target_mask.count if proto.target_mask is not None else n
            increment = persons / base
        else:
            raise NonInvertibleCost(
                f"per-person cost is not invertible for {LEVER_KINDS[type(proto)]}"
            )
    else:
        raise NonInvertibleCost(f"unknown cost model {model!r}")

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
        u = s.utility
        if not isinstance(u, PartitionedUtility):
            raise InvalidSpec("harm reduction template needs a partitioned utility")
        return max(0.0, u.harm_ratio - increment)
    return min(1.0, increment)


@dataclass(frozen=True)
class LeverSpend:
    lever_id: str
    spend: float
    theta: float


@dataclass(frozen=True)
class BudgetAllocationResult:
    splits: tuple[LeverSpend, ...]
    total_welfare: float
    welfare_gain: float
    baseline_welfare: float
    grid_resolution: float


_APPLY_ORDER = {DataLabeling: 0, PredictionImprovement: 1, Benefit: 2, HarmReduction: 3,
                ExpandCapacity: 4}


def _apply_split(s: Scenario, templates: Sequence[LeverTemplate], spends: Sequence[float]) -> Scenario:
    """Apply all purchased levers in the fixed composition order.

    Spend that buys nothing (zero spend, or a capacity increment capped to
    zero by exhausted headroom) is skipped rather than applied.
    """
    staged = []
    for idx, (t, spend) in enumerate(zip(templates, spends)):
        if spend == 0:
            continue
        theta = theta_from_spend(t, spend, s)
        if isinstance(t.prototype, ExpandCapacity) and theta <= 0:
            continue
        staged.append((_APPLY_ORDER[type(t.prototype)], idx, with_theta(t.prototype, theta)))
    out = s
    for _, _, lever in sorted(staged, key=lambda x: (x[0], x[1])):
        out = apply_lever(out, lever)
    return out


def _split_cell(spends: tuple[float, ...], *, scenario: Scenario, templates) -> float:
    try:
        return evaluate(_apply_split(scenario, templates, spends))
    except AllocsimError as err:
        raise AnalysisError(str(err), cell=spends) from err


def _simplex_grid(n_levers: int, budget: float, step: float) -> list[tuple[float, ...]]:
    """All spend tuples at multiples of step with total <= budget."""
    n_steps = int(math.floor(budget / step + 1e-9))
    cells: list[tuple[float, ...]] = []

    def rec(prefix: tuple[float, ...], remaining_steps: int, depth: int):
        if depth == n_levers - 1:
            for i in range(remaining_steps + 1):
                cells.append(prefix + (i * step,))
            return
        for i in range(remaining_steps + 1):
            rec(prefix + (i * step,), remaining_steps - i, depth + 1)

    rec((), n_steps, 0)
    return cells


def optimize_budget(
    s: Scenario,
    templates: Sequence[LeverTemplate],
    budget: float,
    resolution: float | None = None,
    *,
    workers: int = 1,
) -> BudgetAllocationResult:
    """Exhaustive search over the spend simplex for the welfare-maximal split.

    Ties break toward lexicographically smaller spends in template order,
    so results are reproducible and worker-count independent. Unspent
    budget is allowed (a lever can be welfare-reducing at the margin).
    """
    if not 1 <= len(templates) <= 3:
        raise InvalidSpec("optimize_budget takes 1 to 3 lever templates")
    if budget < 0:
        raise InvalidSpec("budget must be >= 0")
    step = budget / 100 if resolution is None else resolution
    if budget == 0:
        baseline = evaluate(s)
        zero = tuple(LeverSpend(t.lever_id, 0.0, theta_from_spend(t, 0.0, s)) for t in templates)
        return BudgetAllocationResult(zero, baseline, 0.0, baseline, step)
    if step <= 0:
        raise InvalidSpec("resolution must be > 0")

    baseline = evaluate(s)
    cells = _simplex_grid(len(templates), budget, step)
    fn = partial(_split_cell, scenario=s, templates=tuple(templates))
    welfares = _map_cells(fn, cells, workers)
    best_idx = 0
    for i in range(1, len(cells)):
        if welfares[i] > welfares[best_idx] or (
            welfares[i] == welfares[best_idx] and cells[i] < cells[best_idx]
        ):
            best_idx = i
    best = cells[best_idx]
    splits = tuple(
        LeverSpend(t.lever_id, spend, theta_from_spend(t, spend, s))
        for t, spend in zip(templates, best)
    )
    return BudgetAllocationResult(
        splits=splits,
        total_welfare=welfares[best_idx],
        welfare_gain=welfares[best_idx] - baseline,
        baseline_welfare=baseline,
        grid_resolution=step,
    )


# ---------------------------------------------------------------------------
# Q2: break-even and equivalent cost
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeverFamily:
    """A lever parameterized by magnitude over a closed range."""

    prototype: Lever
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if self.theta_max <= self.theta_min:
            raise InvalidSpec("theta_max must exceed theta_min")

    def lever(self, theta: float) -> Lever:
        return with_theta(self.prototype, theta)


@dataclass(frozen=True)
class BreakEvenPoint:
    theta: float
    gain: float
    gain_minus_benchmark: float
    equivalent_cost: float | None = None


@dataclass(frozen=True)
class BreakEvenResult:
    theta_star: float | None
    benchmark_gain: float
    attained: bool
    gain_curve: tuple[BreakEvenPoint, ...]
    rmse_parity_eta: float | None = None


def break_even(
    s: Scenario,
    lever_prototype: PredictionImprovement,
    eta_grid: Sequence[float],
    benchmark: Lever,
    *,
    equivalent_cost_family: LeverFamily | None = None,
    workers: int = 1,
) -> BreakEvenResult:
    """Smallest grid magnitude whose gain matches the benchmark lever's gain.

    First-crossing scan, not bisection: with subgroup masks the gain curve
    need not be monotone. When ``equivalent_cost_family`` is given, each
    curve point also carries the benchmark spend producing the same gain
    (the willingness-to-pay readout).
    """
    grid = [float(t) for t in eta_grid]
    if sorted(grid) != grid:
        raise InvalidSpec("eta grid must be sorted ascending")
    baseline = evaluate(s)
    benchmark_gain = welfare_gain(s, benchmark, baseline=baseline)
    fn = partial(_curve_cell, scenario=s, prototype=lever_prototype, baseline=baseline)
    rows = _map_cells(fn, grid, workers)

    points = []
    theta_star = None
    for theta, _w, gain, err in rows:
        if err is not None:
            raise AnalysisError(err, cell=(theta,))
        equiv = None
        if equivalent_cost_family is not None:
            res = equivalent_cost(
                s, with_theta(lever_prototype, theta), equivalent_cost_family, baseline=baseline
            )
            equiv = res.cost if res.attained else None
        points.append(BreakEvenPoint(theta, gain, gain - benchmark_gain, equiv))
        if theta_star is None and gain >= benchmark_gain:
            theta_star = theta

    parity = None
    if lever_prototype.mask is not None:
        parity = rmse_parity_eta(s.population, lever_prototype.mask)
    return BreakEvenResult(
        theta_star=theta_star,
        benchmark_gain=benchmark_gain,
        attained=theta_star is not None,
        gain_curve=tuple(points),
        rmse_parity_eta=parity,
    )


@dataclass(frozen=True)
class EquivalentCostResult:
    target_gain: float
    attained: bool
    theta: float | None
    cost: float | None


def equivalent_cost(
    s: Scenario,
    lever: Lever,
    benchmark_family: LeverFamily,
    *,
    baseline: float | None = None,
    monotonicity_samples: int = 9,
    rel_tol: float = 1e-6,
) -> EquivalentCostResult:
    """Benchmark spend that produces the same welfare gain as ``lever``.

    Validates that the benchmark gain is nondecreasing in magnitude on a
    sample grid, then bisects for the smallest magnitude matching the
    target gain and prices it with the benchmark's cost model. Returns
    attained=False when the target exceeds the benchmark's maximal gain.
    """
    base = evaluate(s) if baseline is None else baseline
    target = welfare_gain(s, lever, baseline=base)

    def gain_at(theta: float) -> float:
        return welfare_gain(s, benchmark_family.lever(theta), baseline=base)

    lo, hi = benchmark_family.theta_min, benchmark_family.theta_max
    sample_thetas = np.linspace(lo, hi, monotonicity_samples)
    sample_gains = [gain_at(float(t)) for t in sample_thetas]
    if any(b < a for a, b in zip(sample_gains, sample_gains[1:])):
        raise NonMonotoneBenchmark(
            "benchmark gain decreased between sampled magnitudes; "
            "use break_even's first-crossing scan instead"
        )

    if sample_gains[0] >= target:
        theta = lo
    elif sample_gains[-1] < target:
        return EquivalentCostResult(target_gain=target, attained=False, theta=None, cost=None)
    else:
        while (hi - lo) > rel_tol * max(abs(hi), 1.0):
            mid = 0.5 * (lo + hi)
            if gain_at(mid) >= target:
                hi = mid
            else:
                lo = mid
        theta = hi
    cost = lever_cost(benchmark_family.lever(theta), s.population)
    return EquivalentCostResult(target_gain=target, attained=True, theta=theta, cost=cost)


# ---------------------------------------------------------------------------
# Q3: ratio grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioGrid:
    axis_a: tuple[float, ...]
    axis_b: tuple[float, ...]
    gains_a: tuple[float, ...]
    gains_b: tuple[float, ...]
    ratios: np.ndarray
    defined: np.ndarray
    truncation: tuple[float, float]

    def __post_init__(self):
        self.ratios.setflags(write=False)
        self.defined.setflags(write=False)

    def truncated(self) -> np.ndarray:
        """Presentation copy clipped to the truncation bounds; raw values stay."""
        lo, hi = self.truncation
        return np.clip(self.ratios, lo, hi)


def ratio_grid(
    s: Scenario,
    lever_a: Lever,
    grid_a: Sequence[float],
    lever_b: Lever,
    grid_b: Sequence[float],
    *,
    truncation: tuple[float, float] = (0.2, 5.0),
    workers: int = 1,
) -> RatioGrid:
    """ratios[i, j] = gain of lever A at grid_a[i] over gain of lever B at
    grid_b[j]; cells with nonpositive denominator are flagged undefined."""
    baseline = evaluate(s)
    fa = partial(_curve_cell, scenario=s, prototype=lever_a, baseline=baseline)
    fb = partial(_curve_cell, scenario=s, prototype=lever_b, baseline=baseline)
    rows_a = _map_cells(fa, [float(t) for t in grid_a], workers)
    rows_b = _map_cells(fb, [float(t) for t in grid_b], workers)
    for rows in (rows_a, rows_b):
        for theta, _w, _g, err in rows:
            if err is not None:
                raise AnalysisError(err, cell=(theta,))
    gains_a = np.array([g for _t, _w, g, _e in rows_a])
    gains_b = np.array([g for _t, _w, g, _e in rows_b])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = gains_a[:, None] / gains_b[None, :]
    defined = np.broadcast_to(gains_b[None, :] > 0, ratios.shape).copy()
    ratios = np.where(defined, ratios, np.nan)
    return RatioGrid(
        axis_a=tuple(float(t) for t in grid_a),
        axis_b=tuple(float(t) for t in grid_b),
        gains_a=tuple(float(g) for g in gains_a),
        gains_b=tuple(float(g) for g in gains_b),
        ratios=ratios,
        defined=defined,
        truncation=truncation,
    )
