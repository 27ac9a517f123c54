import numpy as np
import pytest

from allocsim.population import Population


def make_population(
    outcomes,
    predictions=None,
    labeled=None,
    direction="higher_is_risk",
    covariates=None,
    groups=None,
    weights=None,
):
    outcomes = np.asarray(outcomes, dtype=float)
    n = len(outcomes)
    if predictions is None:
        predictions = outcomes.copy()
    if labeled is None:
        labeled = np.ones(n, dtype=bool)
    return Population(
        ids=tuple(f"r{i}" for i in range(n)),
        outcomes=outcomes,
        predictions=np.asarray(predictions, dtype=float),
        labeled=np.asarray(labeled, dtype=bool),
        outcome_direction=direction,
        covariates={k: np.array(v, dtype=object) for k, v in (covariates or {}).items()},
        groups={k: np.array(v, dtype=bool) for k, v in (groups or {}).items()},
        weights=weights,
    )


@pytest.fixture
def tiny_pop():
    """Five records with covariates used across mask tests."""
    return make_population(
        outcomes=[10, 20, 30, 40, 50],
        predictions=[12, 18, 33, 41, 48],
        covariates={
            "age": ["30", "40", "36", "22", "61"],
            "last_job": ["clerk", "", "welder", "clerk", ""],
        },
        groups={"female": [True, False, True, False, True]},
    )


def reversal_population(seed=6, n=4000):
    """Noisy fixture where capacity expansion flips sign as harm grows.

    A quarter of records at outcome 400, prediction noise of the same
    order as the signal, so the marginal picks at low capacity are mostly
    not at risk.
    """
    from allocsim.synth import SynthSpec, TwoPoint, generate

    return generate(
        SynthSpec(size=n, outcome_dist=TwoPoint(0.25, 0.0, 400.0), noise_sigma=400.0, seed=seed)
    )


def employment_subgroup_population(seed=0, n=4000):
    """Employment-style population with a poorly-predicted subgroup.

    Records with age > 35 and missing job history carry extra prediction
    noise, so their RMSE exceeds the population's and targeted data
    collection has something to fix.
    """
    rng = np.random.default_rng(seed)
    outcomes = np.where(rng.random(n) < 0.15, 400.0, 0.0)
    age = rng.integers(20, 61, size=n)
    missing_job = rng.random(n) < np.where(age > 35, 0.30, 0.05)
    subgroup = (age > 35) & missing_job
    noise = rng.normal(0.0, 140.0, size=n)
    extra = rng.normal(0.0, 260.0, size=n)
    predictions = outcomes + noise + np.where(subgroup, extra, 0.0)
    return make_population(
        outcomes,
        predictions,
        covariates={
            "age": [str(a) for a in age],
            "last_job": ["" if m else "recorded" for m in missing_job],
        },
    )
