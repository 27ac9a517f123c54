"""When misallocation hurts, which lever should a planner prefer?

With a harm/benefit objective (wrongly treated records cost h, correctly
treated ones gain b) the sign of capacity expansion flips as h/b grows,
while prediction improvements become more valuable. The ratio grid prices
one lever in units of the other even when neither has a known cost.

Run: python3 demos/03_harm_reversal_and_ratio.py
"""

from allocsim import (
    Constraint,
    ExpandCapacity,
    HarmReduction,
    PartitionedUtility,
    PredictionImprovement,
    Scenario,
    TwoPoint,
    SynthSpec,
    generate,
    ratio_grid,
    welfare_gain,
)

pop = generate(SynthSpec(size=4000, outcome_dist=TwoPoint(0.25, 0.0, 400.0),
                         noise_sigma=400.0, seed=6))


def scenario(harm_ratio):
    return Scenario(
        population=pop,
        utility=PartitionedUtility(below_value=-harm_ratio, above_value=1.0, beta=0.25),
        constraint=Constraint(capacity=0.01, population_size=pop.size),
    )


print("Capacity +1pp vs uniform 50% prediction improvement, by harm ratio:")
print("  h/b   capacity gain   prediction gain")
for h in (0.0, 1.0, 2.0, 3.0):
    g_cap = welfare_gain(scenario(h), ExpandCapacity(delta_alpha=0.01))
    g_eta = welfare_gain(scenario(h), PredictionImprovement(eta=0.5))
    print(f"  {h:3.1f}   {g_cap:+.6f}      {g_eta:+.6f}")
print()
print("Capacity gains turn negative once misallocation harm outweighs the")
print("benefit of reaching extra at-risk records; prediction gains rise.")
print()

s = scenario(2.0)
grid_eta = [0.05, 0.1, 0.2, 0.4, 0.8]
grid_harm = [0.0, 0.5, 1.0, 1.5]
grid = ratio_grid(s, PredictionImprovement(eta=0.0), grid_eta,
                  HarmReduction(new_harm_ratio=0.0), grid_harm)

print("Ratio of welfare gains at h/b = 2: rows = RMSE reduction eta,")
print("columns = harm ratio reduced to; cells clipped to [0.2, 5.0]:")
truncated = grid.truncated()
header = "  eta\\to " + "".join(f"{t:8.1f}" for t in grid_harm)
print(header)
for i, eta in enumerate(grid_eta):
    cells = []
    for j in range(len(grid_harm)):
        cells.append(f"{truncated[i, j]:8.2f}" if grid.defined[i, j] else "       -")
    print(f"  {eta:5.2f} " + "".join(cells))
print()
print("A cell of 2.0 reads: the improvement is worth buying as long as it")
print("costs less than twice the harm-reduction program it replaces.")
