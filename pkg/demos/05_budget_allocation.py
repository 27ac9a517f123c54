"""Designing a transfer program: split the budget between surveys and slots.

A new program starts with no survey data and no capacity. Surveys cost 13
per household and reveal predictions; each funded slot delivers a transfer
of 100. The optimizer searches the spend simplex for the welfare-maximal
split at each total budget, reproducing the classic pattern: small budgets
mix surveying with transfers, large budgets survey everyone first.

Run: python3 demos/05_budget_allocation.py  (about a minute)
"""

from allocsim import (
    CRRAUtility,
    Constraint,
    DataLabeling,
    ExpandCapacity,
    LeverTemplate,
    PartitionedUtility,
    PerPersonCost,
    Scenario,
    apply_labeling,
    optimize_budget,
    poverty_fixture,
)

N = 400
SURVEY_COST = 13.0
TRANSFER = 100.0

base_pop = apply_labeling(poverty_fixture(seed=5, size=N), DataLabeling(label_share=0.0, seed=9))
templates = (
    LeverTemplate("surveys", DataLabeling(label_share=0.0, seed=9,
                                          cost=PerPersonCost(unit_cost=SURVEY_COST))),
    LeverTemplate("transfers", ExpandCapacity(delta_alpha=0.01,
                                              cost=PerPersonCost(unit_cost=TRANSFER))),
)
full_coverage_cost = SURVEY_COST * N

for name, util in (
    ("CRRA rho=3", CRRAUtility(rho=3.0, benefit=TRANSFER)),
    ("step (poorer half)", PartitionedUtility(below_value=0.0, above_value=TRANSFER, beta=0.5)),
):
    scenario = Scenario(population=base_pop, utility=util,
                        constraint=Constraint(capacity=1 / N, population_size=N), seed=3)
    print(f"Objective: {name} (full survey coverage costs {full_coverage_cost:.0f})")
    print("  budget    survey spend  share->surveys  coverage  capacity")
    for budget in (2_000.0, 6_000.0, 12_000.0, 20_000.0, 30_000.0):
        res = optimize_budget(scenario, templates, budget, resolution=budget / 50)
        by_id = {sp.lever_id: sp for sp in res.splits}
        surveys = by_id["surveys"]
        capacity = 1 / N + by_id["transfers"].theta
        print(f"  {budget:7.0f}   {surveys.spend:10.0f}   {surveys.spend / budget:13.2f} "
              f"  {surveys.theta:8.2f}  {capacity:8.2f}")
    print()

print("Sensitivity: rerunning the 12,000 budget at half the grid step")
scenario = Scenario(population=base_pop, utility=CRRAUtility(rho=3.0, benefit=TRANSFER),
                    constraint=Constraint(capacity=1 / N, population_size=N), seed=3)
for step in (12_000.0 / 50, 12_000.0 / 100):
    res = optimize_budget(scenario, templates, 12_000.0, resolution=step)
    surveys = next(sp for sp in res.splits if sp.lever_id == "surveys")
    print(f"  step {step:6.0f}: survey spend {surveys.spend:8.0f}, "
          f"welfare {res.total_welfare:.3e}")
print()
print("The optimal survey share rises with budget and saturates once")
print("everyone is covered; finer grids refine the split, not the story.")
