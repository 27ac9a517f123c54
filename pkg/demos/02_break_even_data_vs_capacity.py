"""Survey a hard-to-predict subgroup, or buy more screening slots?

A planner can spend caseworker hours collecting intake information for
records whose predictions are poor (here: older records with missing job
history), or spend the same hours on additional screening slots. Survey
costs are known (1 hour per record); the accuracy gain is not. The
break-even scan answers: how large an RMSE reduction in the subgroup
would the surveys need to deliver to beat the slots?

Run: python3 demos/02_break_even_data_vs_capacity.py
"""

import numpy as np

from allocsim import (
    Constraint,
    ExpandCapacity,
    LinearCost,
    LeverFamily,
    PartitionedUtility,
    Population,
    PredictionImprovement,
    Scenario,
    break_even,
    covariate_mask,
    prediction_band_mask,
    rmse,
    rmse_parity_eta,
)

HOURS_PER_SURVEY = 1.0
HOURS_PER_SLOT = 4.0


def build_population(seed=0, n=4000):
    # subgroup (age > 35, job history missing) carries extra prediction noise
    rng = np.random.default_rng(seed)
    outcomes = np.where(rng.random(n) < 0.15, 400.0, 0.0)
    age = rng.integers(20, 61, size=n)
    missing = rng.random(n) < np.where(age > 35, 0.30, 0.05)
    subgroup = (age > 35) & missing
    predictions = outcomes + rng.normal(0, 140.0, n) + np.where(subgroup, rng.normal(0, 260.0, n), 0.0)
    return Population(
        ids=tuple(f"r{i}" for i in range(n)),
        outcomes=outcomes,
        predictions=predictions,
        labeled=np.ones(n, dtype=bool),
        covariates={
            "age": np.array([str(a) for a in age], dtype=object),
            "last_job": np.array(["" if m else "recorded" for m in missing], dtype=object),
        },
    )


pop = build_population()
scenario = Scenario(
    population=pop,
    utility=PartitionedUtility(below_value=0.0, above_value=1.0, beta=0.15),
    constraint=Constraint(capacity=0.15, population_size=pop.size),
)

subgroup = covariate_mask(pop, "age > 35 AND last_job IS MISSING")
print(f"Subgroup: {subgroup.count} of {pop.size} records "
      f"({100 * subgroup.count / pop.size:.1f}%)")
print(f"  subgroup RMSE  : {rmse(pop, subgroup):7.1f}")
print(f"  population RMSE: {rmse(pop):7.1f}")
print(f"  RMSE reduction needed just to reach population parity: "
      f"{100 * rmse_parity_eta(pop, subgroup):.0f}%")
print()

budget_hours = subgroup.count * HOURS_PER_SURVEY
slots = budget_hours / HOURS_PER_SLOT
benchmark = ExpandCapacity(delta_alpha=slots / pop.size)
grid = [round(x, 10) for x in np.linspace(0, 1, 101)]

family = LeverFamily(
    prototype=ExpandCapacity(delta_alpha=0.01, cost=LinearCost(unit_cost=HOURS_PER_SLOT * pop.size,
                                                               currency_label="hours")),
    theta_min=0.0001,
    theta_max=0.5,
)

result = break_even(
    scenario,
    PredictionImprovement(eta=0.0, mask=subgroup),
    grid,
    benchmark,
    equivalent_cost_family=family,
)
print(f"Surveying the whole subgroup costs {budget_hours:.0f} hours "
      f"= {slots:.0f} screening slots forgone.")
if result.attained:
    print(f"Break-even RMSE reduction: {100 * result.theta_star:.0f}%")
print()
print("  Willingness-to-pay readout (hours of slots matching each gain):")
print("  eta    gain        equivalent hours")
for point in result.gain_curve[10:60:10]:
    equiv = "-" if point.equivalent_cost is None else f"{point.equivalent_cost:8.0f}"
    print(f"  {point.theta:4.2f}  {point.gain:+.6f}  {equiv}")
print()

# restricting surveys to the decision boundary shrinks the bill and the bar
band = prediction_band_mask(pop, cutoff_rank=scenario.constraint.slots, bandwidth=0.10)
near = subgroup & band
near_benchmark = ExpandCapacity(
    delta_alpha=(near.count * HOURS_PER_SURVEY / HOURS_PER_SLOT) / pop.size
)
near_result = break_even(scenario, PredictionImprovement(eta=0.0, mask=near), grid, near_benchmark)
print(f"Band-restricted surveys ({near.count} records near the cutoff):")
if near_result.attained:
    print(f"  break-even drops to {100 * near_result.theta_star:.0f}% "
          f"(vs {100 * result.theta_star:.0f}% for the full subgroup)")
print("Targeting marginal cases needs a far smaller accuracy gain to pay off.")
