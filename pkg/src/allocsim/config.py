"""Declarative scenario configuration.

One YAML document (or an equivalent JSON fragment over HTTP) declares the
population source, utility, constraint, named masks and levers, and
exactly one analysis. ``parse_config`` validates the mapping and resolves
every reference; analysis surfaces (CLI and service) consume the parsed
object so both speak the identical schema.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
import yaml

from .compare import LeverFamily, LeverTemplate, Scenario
from .errors import AllocsimError, ConfigError, DataError
from .levers import (
    Benefit,
    CostModel,
    DataLabeling,
    ExpandCapacity,
    HarmReduction,
    Lever,
    LinearCost,
    PerPersonCost,
    PredictionImprovement,
    TableCost,
)
from .policy import Constraint, SubgroupCap
from .population import (
    DIRECTIONS,
    HIGHER_IS_RISK,
    Mask,
    Population,
    covariate_mask,
    load_population,
    prediction_band_mask,
)
from .synth import Lognormal, Pareto, SynthSpec, TwoPoint, generate
from .utility import AffineUtility, CRRAUtility, PartitionedUtility, UtilitySpec

ANALYSIS_KINDS = (
    "evaluate",
    "curve",
    "break_even",
    "equivalent_cost",
    "ratio_grid",
    "optimize_budget",
)


@dataclass(frozen=True)
class ParsedConfig:
    raw: dict
    population: Population
    scenario: Scenario
    masks: dict[str, Mask]
    levers: dict[str, Lever]
    analysis: dict


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            mapping = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"config is not valid YAML: {err}") from None
    if not isinstance(mapping, dict):
        raise ConfigError("config document must be a mapping")
    return mapping


def _section(mapping: Mapping, name: str, required: bool = True) -> dict:
    value = mapping.get(name)
    if value is None:
        if required:
            raise ConfigError("section missing", field=name)
        return {}
    if not isinstance(value, dict):
        raise ConfigError("section must be a mapping", field=name)
    return value


def _get(section: Mapping, field: str, path: str, *, required=True, default=None):
    if field not in section or section[field] is None:
        if required:
            raise ConfigError("field missing", field=f"{path}.{field}")
        return default
    return section[field]


def _number(section, field, path, *, required=True, default=None) -> float | None:
    value = _get(section, field, path, required=required, default=default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", field=f"{path}.{field}")
    return float(value)


# ---------------------------------------------------------------------------
# Population
# ---------------------------------------------------------------------------

def _build_population(mapping: Mapping) -> Population:
    has_dataset = "dataset" in mapping and mapping["dataset"] is not None
    has_synth = "synth" in mapping and mapping["synth"] is not None
    if has_dataset == has_synth:
        raise ConfigError("declare exactly one of dataset / synth", field="dataset")
    if has_dataset:
        d = _section(mapping, "dataset")
        direction = _get(d, "direction", "dataset", required=False, default=HIGHER_IS_RISK)
        if direction not in DIRECTIONS:
            raise ConfigError(f"unknown direction {direction!r}", field="dataset.direction")
        source: Any = _get(d, "path", "dataset", required=False)
        content = _get(d, "content", "dataset", required=False)
        if (source is None) == (content is None):
            raise ConfigError("declare exactly one of path / content", field="dataset")
        if content is not None:
            source = io.StringIO(content)
        try:
            return load_population(
                source,
                outcome_col=_get(d, "outcome_col", "dataset"),
                prediction_col=_get(d, "prediction_col", "dataset"),
                labeled_col=_get(d, "labeled_col", "dataset", required=False),
                weight_col=_get(d, "weight_col", "dataset", required=False),
                group_cols=_get(d, "group_cols", "dataset", required=False, default=[]),
                id_col=_get(d, "id_col", "dataset", required=False),
                outcome_direction=direction,
                delimiter=_get(d, "delimiter", "dataset", required=False),
                missing=_get(d, "missing", "dataset", required=False, default=""),
            )
        except FileNotFoundError:
            raise DataError(f"dataset file not found: {source}") from None
    return generate(build_synth_spec(_section(mapping, "synth")))


def build_synth_spec(s: Mapping) -> SynthSpec:
    dist_map = _section(s, "distribution")
    kind = _get(dist_map, "kind", "synth.distribution")
    if kind == "two_point":
        dist = TwoPoint(
            share_at_risk=_number(dist_map, "share_at_risk", "synth.distribution"),
            low=_number(dist_map, "low", "synth.distribution"),
            high=_number(dist_map, "high", "synth.distribution"),
        )
    elif kind == "lognormal":
        sigma = _number(dist_map, "sigma", "synth.distribution")
        mean = _number(dist_map, "mean", "synth.distribution", required=False)
        mu = _number(dist_map, "mu", "synth.distribution", required=False)
        if (mean is None) == (mu is None):
            raise ConfigError("declare exactly one of mu / mean", field="synth.distribution")
        dist = Lognormal(mu, sigma) if mu is not None else Lognormal.with_mean(mean, sigma)
    elif kind == "pareto":
        dist = Pareto(
            shape=_number(dist_map, "shape", "synth.distribution"),
            scale=_number(dist_map, "scale", "synth.distribution"),
        )
    else:
        raise ConfigError(f"unknown distribution kind {kind!r}", field="synth.distribution.kind")
    direction = _get(s, "direction", "synth", required=False, default=HIGHER_IS_RISK)
    if direction not in DIRECTIONS:
        raise ConfigError(f"unknown direction {direction!r}", field="synth.direction")
    try:
        return SynthSpec(
            size=int(_number(s, "size", "synth")),
            outcome_dist=dist,
            noise_sigma=_number(s, "noise_sigma", "synth"),
            noise_on_log=bool(_get(s, "noise_on_log", "synth", required=False, default=False)),
            direction=direction,
            seed=int(_number(s, "seed", "synth", required=False, default=0.0)),
        )
    except AllocsimError as err:
        raise ConfigError(str(err), field="synth") from err


# ---------------------------------------------------------------------------
# Utility, constraint, masks, levers
# ---------------------------------------------------------------------------

def _build_utility(mapping: Mapping) -> UtilitySpec:
    u = _section(mapping, "utility")
    kind = _get(u, "kind", "utility")
    try:
        if kind == "partitioned":
            above = _number(u, "above_value", "utility", required=False)
            if above is None:
                above = _number(u, "b", "utility", required=False, default=1.0)
            below = _number(u, "below_value", "utility", required=False)
            harm_ratio = _number(u, "harm_ratio", "utility", required=False)
            if below is not None and harm_ratio is not None:
                raise ConfigError(
                    "declare at most one of below_value / harm_ratio", field="utility"
                )
            if below is None:
                below = -harm_ratio * above if harm_ratio is not None else 0.0
            return PartitionedUtility(
                below_value=below,
                above_value=above,
                beta=_number(u, "beta", "utility", required=False),
                threshold=_number(u, "threshold", "utility", required=False),
                at_risk_side=_get(u, "at_risk_side", "utility", required=False, default="auto"),
            )
        if kind == "crra":
            return CRRAUtility(
                rho=_number(u, "rho", "utility"),
                benefit=_number(u, "benefit", "utility"),
            )
        if kind == "affine":
            return AffineUtility(
                slope=_number(u, "slope", "utility"),
                intercept=_number(u, "intercept", "utility"),
            )
    except AllocsimError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), field="utility") from err
    raise ConfigError(f"unknown utility kind {kind!r}", field="utility.kind")


def _build_masks(mapping: Mapping, pop: Population, capacity: float) -> dict[str, Mask]:
    masks: dict[str, Mask] = {}
    declared = _section(mapping, "masks", required=False)
    pending = dict(declared)
    # two passes so intersections can reference earlier masks in any order
    for _ in range(len(pending) + 1):
        progressed = False
        for name, spec in list(pending.items()):
            if not isinstance(spec, dict):
                raise ConfigError("mask must be a mapping", field=f"masks.{name}")
            if "intersect" in spec:
                parts = spec["intersect"]
                if not all(p in masks for p in parts):
                    continue
                out = masks[parts[0]]
                for p in parts[1:]:
                    out = out & masks[p]
                masks[name] = Mask(out.member, name)
            elif "predicate" in spec:
                try:
                    masks[name] = covariate_mask(pop, spec["predicate"])
                except AllocsimError as err:
                    raise ConfigError(str(err), field=f"masks.{name}") from err
            elif "band" in spec:
                band = spec["band"]
                cutoff = band.get("cutoff", band.get("cutoff_rank"))
                if cutoff == "capacity":
                    cutoff = int(np.floor(capacity * pop.size))
                try:
                    if "epsilon" in band:
                        masks[name] = prediction_band_mask(
                            pop,
                            cutoff_score=float(band["cutoff_score"]),
                            epsilon=float(band["epsilon"]),
                        )
                    else:
                        masks[name] = prediction_band_mask(
                            pop,
                            cutoff_rank=int(cutoff),
                            bandwidth=float(band["bandwidth"]),
                        )
                except (KeyError, TypeError) as err:
                    raise ConfigError(f"bad band spec: {err}", field=f"masks.{name}") from err
                except AllocsimError as err:
                    raise ConfigError(str(err), field=f"masks.{name}") from err
            elif "group" in spec:
                gname = spec["group"]
                if gname not in pop.groups:
                    raise ConfigError(f"unknown group {gname!r}", field=f"masks.{name}")
                masks[name] = Mask(pop.groups[gname], name)
            else:
                raise ConfigError(
                    "mask needs predicate / band / group / intersect", field=f"masks.{name}"
                )
            del pending[name]
            progressed = True
        if not pending:
            break
        if not progressed:
            raise ConfigError(
                f"unresolvable mask references: {sorted(pending)}", field="masks"
            )
    return masks


def _build_constraint(mapping: Mapping, pop: Population, masks: dict[str, Mask]) -> Constraint:
    c = _section(mapping, "constraint")
    caps = []
    for i, item in enumerate(c.get("subgroup_caps") or []):
        mask_name = _get(item, "mask", f"constraint.subgroup_caps[{i}]")
        if mask_name not in masks:
            raise ConfigError(
                f"unknown mask {mask_name!r}", field=f"constraint.subgroup_caps[{i}].mask"
            )
        caps.append(
            SubgroupCap(
                mask=masks[mask_name],
                capacity=_number(item, "capacity", f"constraint.subgroup_caps[{i}]"),
            )
        )
    try:
        return Constraint(
            capacity=_number(c, "capacity", "constraint"),
            population_size=pop.size,
            subgroup_caps=tuple(caps),
        )
    except AllocsimError as err:
        raise ConfigError(str(err), field="constraint") from err


def _build_cost(spec: Mapping | None, path: str) -> CostModel | None:
    if spec is None:
        return None
    kind = _get(spec, "kind", path)
    label = _get(spec, "currency_label", path, required=False, default="")
    try:
        if kind == "linear":
            return LinearCost(unit_cost=_number(spec, "unit_cost", path), currency_label=label)
        if kind == "per_person":
            return PerPersonCost(unit_cost=_number(spec, "unit_cost", path), currency_label=label)
        if kind == "table":
            points = tuple((float(t), float(c)) for t, c in _get(spec, "points", path))
            return TableCost(points=points, currency_label=label)
    except AllocsimError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), field=path) from err
    raise ConfigError(f"unknown cost kind {kind!r}", field=f"{path}.kind")


def _build_lever(name: str, spec: Mapping, masks: dict[str, Mask]) -> Lever:
    path = f"levers.{name}"
    kind = _get(spec, "kind", path)
    cost = _build_cost(spec.get("cost"), f"{path}.cost")

    def mask_ref(field_name: str, required=False) -> Mask | None:
        ref = _get(spec, field_name, path, required=required)
        if ref is None:
            return None
        if ref not in masks:
            raise ConfigError(f"unknown mask {ref!r}", field=f"{path}.{field_name}")
        return masks[ref]

    try:
        if kind == "prediction_improvement":
            return PredictionImprovement(
                eta=_number(spec, "eta", path, required=False, default=0.0),
                mask=mask_ref("mask"),
                cost=cost,
            )
        if kind == "expand_capacity":
            return ExpandCapacity(
                delta_alpha=_number(spec, "delta_alpha", path, required=False, default=0.01),
                target_mask=mask_ref("target_mask"),
                cost=cost,
            )
        if kind == "benefit":
            return Benefit(new_benefit=_number(spec, "new_benefit", path, required=False,
                                               default=0.0), cost=cost)
        if kind == "harm_reduction":
            return HarmReduction(
                new_harm_ratio=_number(spec, "new_harm_ratio", path, required=False, default=0.0),
                cost=cost,
            )
        if kind == "data_labeling":
            return DataLabeling(
                label_share=_number(spec, "label_share", path, required=False, default=0.0),
                order=_get(spec, "order", path, required=False, default="random"),
                seed=int(_number(spec, "seed", path, required=False, default=0.0)),
                mask=mask_ref("mask"),
                cost=cost,
            )
    except AllocsimError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), field=path) from err
    raise ConfigError(f"unknown lever kind {kind!r}", field=f"{path}.kind")


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------

def _grid(spec, path: str) -> list[float]:
    if spec is None:
        raise ConfigError("grid missing", field=path)
    if isinstance(spec, list):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict):
        start = _number(spec, "start", path)
        stop = _number(spec, "stop", path)
        num = int(_number(spec, "num", path))
        if num < 2:
            raise ConfigError("grid num must be >= 2", field=path)
        values = [float(v) for v in np.linspace(start, stop, num)]
    else:
        raise ConfigError("grid must be a list or {start, stop, num}", field=path)
    if sorted(values) != values:
        raise ConfigError("grid must be sorted ascending", field=path)
    return values


def _lever_ref(a: Mapping, field: str, levers: dict[str, Lever], path: str) -> Lever:
    name = _get(a, field, path)
    if name not in levers:
        raise ConfigError(f"unknown lever {name!r}", field=f"{path}.{field}")
    return levers[name]


def _build_analysis(mapping: Mapping, levers: dict[str, Lever]) -> dict:
    a = _section(mapping, "analysis")
    kind = _get(a, "kind", "analysis")
    if kind not in ANALYSIS_KINDS:
        raise ConfigError(f"unknown analysis kind {kind!r}", field="analysis.kind")
    out: dict[str, Any] = {"kind": kind}
    path = "analysis"
    if kind == "evaluate":
        return out
    if kind == "curve":
        out["lever_id"] = _get(a, "lever", path)
        out["lever"] = _lever_ref(a, "lever", levers, path)
        out["grid"] = _grid(a.get("grid"), f"{path}.grid")
        return out
    if kind == "break_even":
        out["lever_id"] = _get(a, "lever", path)
        lever = _lever_ref(a, "lever", levers, path)
        if not isinstance(lever, PredictionImprovement):
            raise ConfigError(
                "break_even sweeps a prediction_improvement lever", field=f"{path}.lever"
            )
        out["lever"] = lever
        out["benchmark_id"] = _get(a, "benchmark", path)
        out["benchmark"] = _lever_ref(a, "benchmark", levers, path)
        out["grid"] = _grid(a.get("grid"), f"{path}.grid")
        if bool(a.get("with_equivalent_cost", False)):
            out["equivalent_cost_family"] = _benchmark_family(a, out["benchmark"], path)
        return out
    if kind == "equivalent_cost":
        out["lever_id"] = _get(a, "lever", path)
        out["lever"] = _lever_ref(a, "lever", levers, path)
        out["benchmark_id"] = _get(a, "benchmark", path)
        benchmark = _lever_ref(a, "benchmark", levers, path)
        out["family"] = _benchmark_family(a, benchmark, path)
        return out
    if kind == "ratio_grid":
        out["lever_a_id"] = _get(a, "lever_a", path)
        out["lever_a"] = _lever_ref(a, "lever_a", levers, path)
        out["grid_a"] = _grid(a.get("grid_a"), f"{path}.grid_a")
        out["lever_b_id"] = _get(a, "lever_b", path)
        out["lever_b"] = _lever_ref(a, "lever_b", levers, path)
        out["grid_b"] = _grid(a.get("grid_b"), f"{path}.grid_b")
        trunc = a.get("truncation", [0.2, 5.0])
        if not (isinstance(trunc, list) and len(trunc) == 2):
            raise ConfigError("truncation must be [low, high]", field=f"{path}.truncation")
        out["truncation"] = (float(trunc[0]), float(trunc[1]))
        return out
    # optimize_budget
    names = _get(a, "levers", path)
    if not isinstance(names, list) or not 1 <= len(names) <= 3:
        raise ConfigError("optimize_budget takes 1 to 3 lever names", field=f"{path}.levers")
    templates = []
    for name in names:
        if name not in levers:
            raise ConfigError(f"unknown lever {name!r}", field=f"{path}.levers")
        lever = levers[name]
        if lever.cost is None:
            raise ConfigError(f"lever {name!r} needs a cost model", field=f"{path}.levers")
        templates.append(LeverTemplate(lever_id=name, prototype=lever))
    out["templates"] = tuple(templates)
    out["budget"] = _number(a, "budget", path)
    out["resolution"] = _number(a, "resolution", path, required=False)
    manual = a.get("manual_spends")
    if manual is not None:
        if not isinstance(manual, list) or len(manual) != len(templates):
            raise ConfigError(
                "manual_spends must list one spend per lever", field=f"{path}.manual_spends"
            )
        out["manual_spends"] = tuple(float(v) for v in manual)
    return out


def _benchmark_family(a: Mapping, benchmark: Lever, path: str) -> LeverFamily:
    if benchmark.cost is None:
        raise ConfigError("benchmark lever needs a cost model", field=f"{path}.benchmark")
    from .levers import lever_theta

    theta = lever_theta(benchmark)
    theta_min = _number(a, "benchmark_theta_min", path, required=False, default=theta * 1e-4)
    theta_max = _number(a, "benchmark_theta_max", path, required=False, default=theta * 4.0)
    try:
        return LeverFamily(prototype=benchmark, theta_min=theta_min, theta_max=theta_max)
    except AllocsimError as err:
        raise ConfigError(str(err), field=path) from err


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def parse_config(
    mapping: Mapping,
    *,
    population: Population | None = None,
    seed_override: int | None = None,
) -> ParsedConfig:
    """Validate a config mapping and resolve all references.

    ``population`` injects a pre-loaded dataset (the service path); the
    mapping then needs no dataset/synth section.
    """
    if population is None:
        population = _build_population(mapping)
    utility = _build_utility(mapping)
    c_section = _section(mapping, "constraint")
    capacity = _number(c_section, "capacity", "constraint")
    masks = _build_masks(mapping, population, capacity)
    constraint = _build_constraint(mapping, population, masks)
    policy = _section(mapping, "policy", required=False)
    seed = int(_number(policy, "seed", "policy", required=False, default=0.0))
    if seed_override is not None:
        seed = seed_override
    levers = {
        name: _build_lever(name, spec, masks)
        for name, spec in _section(mapping, "levers", required=False).items()
    }
    analysis = _build_analysis(mapping, levers) if "analysis" in mapping else {"kind": "evaluate"}
    try:
        scenario = Scenario(
            population=population,
            utility=utility,
            constraint=constraint,
            seed=seed,
            stop_at_nonpositive=bool(policy.get("stop_at_nonpositive", False)),
        )
    except AllocsimError as err:
        raise ConfigError(str(err)) from err
    return ParsedConfig(
        raw=dict(mapping),
        population=population,
        scenario=scenario,
        masks=masks,
        levers=levers,
        analysis=analysis,
    )
