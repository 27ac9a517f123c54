"""allocsim: welfare simulation for prediction-based resource allocation.

The engine evaluates threshold ranking policies over an empirical
population, prices policy levers (prediction improvement, capacity,
benefit size, harm reduction, data collection), and answers three
comparison questions: how to split a fixed budget across levers, what
improvement one lever needs to match another, and how much more one
lever is worth than another.
"""

__version__ = "0.1.0"

from .compare import (
    BreakEvenResult,
    BudgetAllocationResult,
    CurvePoint,
    EquivalentCostResult,
    EvaluationResult,
    LeverFamily,
    LeverTemplate,
    RatioGrid,
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
from .errors import AllocsimError
from .levers import (
    Benefit,
    DataLabeling,
    ExpandCapacity,
    HarmReduction,
    LinearCost,
    PerPersonCost,
    PredictionImprovement,
    TableCost,
    apply_benefit,
    apply_capacity,
    apply_harm_reduction,
    apply_labeling,
    apply_prediction_improvement,
    lever_cost,
    with_theta,
)
from .policy import (
    Allocation,
    Constraint,
    SubgroupCap,
    allocate,
    perfect_baseline,
    random_baseline,
    welfare,
    welfare_ratio,
)
from .population import (
    Mask,
    Population,
    covariate_mask,
    load_population,
    prediction_band_mask,
    rmse,
    save_population,
)
from .synth import (
    Lognormal,
    Pareto,
    SynthSpec,
    TwoPoint,
    employment_fixture,
    generate,
    oracle_budget,
    oracle_scan,
    poverty_fixture,
)
from .utility import (
    AffineUtility,
    CRRAUtility,
    PartitionedUtility,
    ResolvedUtility,
    eval_utility,
    net_gain,
    net_gains,
    resolve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
