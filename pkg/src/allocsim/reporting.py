"""Result documents, flat tables, and run manifests.

One builder per analysis kind produces (document, table rows). The CLI
serializes them to disk and the HTTP service returns them verbatim, so
both surfaces always agree number for number. Documents carry the
canonical config hash, engine version, and seed; they contain no
timestamps, making them byte-reproducible. Wall time lives only in the
manifest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from typing import Any, Mapping

from . import __version__
from .compare import (
    break_even,
    equivalent_cost,
    evaluate,
    evaluate_detail,
    optimize_budget,
    ratio_grid,
    welfare_curve,
)
from .config import ParsedConfig
from .errors import AnalysisError
from .levers import LEVER_KINDS
from .utility import CRRAUtility, PartitionedUtility

SCHEMA_VERSION = 1


def _clean(value):
    """JSON-safe copy: non-finite floats become None, full precision kept."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def canonical_json(mapping: Mapping | list) -> str:
    return json.dumps(_clean(mapping), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(mapping: Mapping) -> str:
    return hashlib.sha256(canonical_json(mapping).encode("utf-8")).hexdigest()


def _scenario_summary(cfg: ParsedConfig) -> dict:
    s = cfg.scenario
    u = s.utility
    if isinstance(u, PartitionedUtility):
        utility = {
            "kind": "partitioned",
            "below_value": u.below_value,
            "above_value": u.above_value,
            "beta": u.beta,
            "threshold": u.threshold,
        }
    elif isinstance(u, CRRAUtility):
        utility = {"kind": "crra", "rho": u.rho, "benefit": u.benefit}
    else:
        utility = {"kind": "affine", "slope": u.slope, "intercept": u.intercept}
    return {
        "population_size": s.population.size,
        "labeled_share": s.population.labeled_share(),
        "outcome_direction": s.population.outcome_direction,
        "capacity": s.constraint.capacity,
        "slots": s.constraint.slots,
        "utility": utility,
        "seed": s.seed,
    }


def run_analysis(cfg: ParsedConfig, *, workers: int = 1) -> tuple[dict, list[dict]]:
    """Execute the parsed analysis; returns (result document, table rows)."""
    kind = cfg.analysis["kind"]
    builder = _BUILDERS.get(kind)
    if builder is None:
        raise AnalysisError(f"unknown analysis kind {kind!r}")
    payload, rows = builder(cfg, workers)
    document = {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "config_hash": config_hash(cfg.raw),
        "seed": cfg.scenario.seed,
        "analysis": kind,
        "scenario": _scenario_summary(cfg),
        "result": _clean(payload),
    }
    return document, [_clean(r) for r in rows]


def _evaluate_rows(detail) -> list[dict]:
    return [
        {
            "welfare": detail.welfare,
            "random_baseline": detail.random_baseline,
            "perfect_baseline": detail.perfect_baseline,
            "welfare_ratio": detail.welfare_ratio,
            "slots": detail.slots,
            "slots_used": detail.slots_used,
            "fill_count": detail.fill_count,
            "resolved_threshold": detail.resolved_threshold,
        }
    ]


def _build_evaluate(cfg: ParsedConfig, workers: int):
    detail = evaluate_detail(cfg.scenario)
    rows = _evaluate_rows(detail)
    payload = dict(rows[0])
    payload["warnings"] = list(detail.warnings)
    return payload, rows


def _build_curve(cfg: ParsedConfig, workers: int):
    a = cfg.analysis
    points = welfare_curve(cfg.scenario, a["lever"], a["grid"], workers=workers)
    rows = [
        {"theta": p.theta, "welfare": p.welfare, "gain": p.gain, "error": p.error}
        for p in points
    ]
    payload = {
        "lever": a["lever_id"],
        "lever_kind": LEVER_KINDS[type(a["lever"])],
        "points": rows,
    }
    return payload, rows


def _build_break_even(cfg: ParsedConfig, workers: int):
    a = cfg.analysis
    res = break_even(
        cfg.scenario,
        a["lever"],
        a["grid"],
        a["benchmark"],
        equivalent_cost_family=a.get("equivalent_cost_family"),
        workers=workers,
    )
    rows = [
        {
            "theta": p.theta,
            "gain": p.gain,
            "gain_minus_benchmark": p.gain_minus_benchmark,
            "equivalent_cost": p.equivalent_cost,
        }
        for p in res.gain_curve
    ]
    payload = {
        "lever": a["lever_id"],
        "benchmark": a["benchmark_id"],
        "theta_star": res.theta_star,
        "benchmark_gain": res.benchmark_gain,
        "attained": res.attained,
        "rmse_parity_eta": res.rmse_parity_eta,
        "points": rows,
    }
    return payload, rows


def _build_equivalent_cost(cfg: ParsedConfig, workers: int):
    a = cfg.analysis
    res = equivalent_cost(cfg.scenario, a["lever"], a["family"])
    row = {
        "target_gain": res.target_gain,
        "attained": res.attained,
        "theta": res.theta,
        "cost": res.cost,
    }
    payload = dict(row)
    payload["lever"] = a["lever_id"]
    payload["benchmark"] = a["benchmark_id"]
    return payload, [row]


def _build_ratio_grid(cfg: ParsedConfig, workers: int):
    a = cfg.analysis
    grid = ratio_grid(
        cfg.scenario,
        a["lever_a"],
        a["grid_a"],
        a["lever_b"],
        a["grid_b"],
        truncation=a["truncation"],
        workers=workers,
    )
    truncated = grid.truncated()
    rows = []
    for i, ta in enumerate(grid.axis_a):
        for j, tb in enumerate(grid.axis_b):
            defined = bool(grid.defined[i, j])
            rows.append(
                {
                    "theta_a": ta,
                    "theta_b": tb,
                    "gain_a": grid.gains_a[i],
                    "gain_b": grid.gains_b[j],
                    "defined": defined,
                    "ratio": float(grid.ratios[i, j]) if defined else None,
                    "ratio_truncated": float(truncated[i, j]) if defined else None,
                }
            )
    payload = {
        "lever_a": a["lever_a_id"],
        "lever_b": a["lever_b_id"],
        "axis_a": list(grid.axis_a),
        "axis_b": list(grid.axis_b),
        "truncation": list(grid.truncation),
        "cells": rows,
    }
    return payload, rows


def _resulting_state(cfg: ParsedConfig, templates, spends) -> dict:
    """Scenario state after applying a spend split (engine-side arithmetic
    so presentation layers never compute welfare inputs themselves)."""
    from .compare import _apply_split

    applied = _apply_split(cfg.scenario, templates, spends)
    u = applied.utility
    benefit = u.benefit if isinstance(u, CRRAUtility) else (
        u.above_value if isinstance(u, PartitionedUtility) else None
    )
    return {
        "label_share": applied.population.labeled_share(),
        "capacity": applied.constraint.capacity,
        "slots": applied.constraint.slots,
        "benefit": benefit,
    }


def _build_optimize(cfg: ParsedConfig, workers: int):
    a = cfg.analysis
    res = optimize_budget(
        cfg.scenario, a["templates"], a["budget"], a.get("resolution"), workers=workers
    )
    rows = [
        {"lever_id": sp.lever_id, "spend": sp.spend, "theta": sp.theta}
        for sp in res.splits
    ]
    best_spends = tuple(sp.spend for sp in res.splits)
    payload = {
        "budget": a["budget"],
        "grid_resolution": res.grid_resolution,
        "baseline_welfare": res.baseline_welfare,
        "total_welfare": res.total_welfare,
        "welfare_gain": res.welfare_gain,
        "splits": rows,
        "resulting": _resulting_state(cfg, a["templates"], best_spends),
    }
    manual = a.get("manual_spends")
    if manual is not None:
        from .compare import _apply_split

        manual_welfare = evaluate(_apply_split(cfg.scenario, a["templates"], manual))
        payload["manual"] = {
            "spends": list(manual),
            "welfare": manual_welfare,
            "gain": manual_welfare - res.baseline_welfare,
            "deviation_loss": res.total_welfare - manual_welfare,
            "resulting": _resulting_state(cfg, a["templates"], manual),
        }
    return payload, rows


_BUILDERS = {
    "evaluate": _build_evaluate,
    "curve": _build_curve,
    "break_even": _build_break_even,
    "equivalent_cost": _build_equivalent_cost,
    "ratio_grid": _build_ratio_grid,
    "optimize_budget": _build_optimize,
}


def analysis_cell_count(cfg: ParsedConfig) -> int:
    """Grid size of the parsed analysis; drives the service's inline/job split."""
    a = cfg.analysis
    kind = a["kind"]
    if kind == "curve":
        return len(a["grid"])
    if kind == "break_even":
        return len(a["grid"])
    if kind == "ratio_grid":
        return len(a["grid_a"]) + len(a["grid_b"])
    if kind == "optimize_budget":
        budget = a["budget"]
        step = a.get("resolution") or (budget / 100 if budget else 1)
        n = int(budget / step) + 1 if budget else 1
        m = len(a["templates"])
        count = 1
        for i in range(m):
            count = count * (n + i) // (i + 1)
        return count
    return 1


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def document_bytes(document: Mapping) -> bytes:
    return (json.dumps(_clean(document), indent=2, sort_keys=True, allow_nan=False) + "\n").encode(
        "utf-8"
    )


def table_bytes(rows: list[dict], fmt: str) -> bytes:
    if fmt == "json":
        return (json.dumps(_clean(rows), indent=2, sort_keys=True, allow_nan=False) + "\n").encode(
            "utf-8"
        )
    if fmt != "csv":
        raise AnalysisError(f"unknown table format {fmt!r}")
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_value(v) for k, v in row.items()})
    return buf.getvalue().encode("utf-8")


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_outputs(
    out_dir: str,
    document: Mapping,
    rows: list[dict],
    *,
    table_format: str = "csv",
    wall_time_s: float,
    workers: int,
) -> dict[str, str]:
    """Write result.json, table.<fmt>, and manifest.json; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    result_path = os.path.join(out_dir, "result.json")
    table_path = os.path.join(out_dir, f"table.{table_format}")
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(result_path, "wb") as fh:
        fh.write(document_bytes(document))
    with open(table_path, "wb") as fh:
        fh.write(table_bytes(rows, table_format))
    manifest = {
        "config_hash": document["config_hash"],
        "engine_version": document["engine_version"],
        "seed": document["seed"],
        "analysis": document["analysis"],
        "workers": workers,
        "wall_time_s": wall_time_s,
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"result": result_path, "table": table_path, "manifest": manifest_path}
