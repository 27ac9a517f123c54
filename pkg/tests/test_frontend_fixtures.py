"""The explorer UI's committed fixtures are verbatim CLI result documents.

The frontend test suite asserts its views display these fixtures' fields
untouched; this module asserts the fixtures equal a fresh engine run of
the same configs, closing the UI = CLI fidelity chain without requiring
any UI build.
"""

import json
import os

import pytest

from allocsim.config import load_config_file, parse_config
from allocsim.reporting import document_bytes, run_analysis

ROOT = os.path.join(os.path.dirname(__file__), "..")
FIXTURES = os.path.join(ROOT, "frontend", "tests", "fixtures")

CASES = [
    ("ui_breakeven_toy.yaml", "breakeven_result.json"),
    ("ui_optimize_toy.yaml", "optimize_result.json"),
    ("evaluate_twopoint.yaml", "evaluate_result.json"),
    ("ratio_grid_harm.yaml", "ratio_grid_result.json"),
]


@pytest.mark.parametrize("config_name,fixture_name", CASES)
def test_fixture_matches_fresh_cli_document(config_name, fixture_name):
    fixture_path = os.path.join(FIXTURES, fixture_name)
    if not os.path.exists(fixture_path):
        pytest.skip("frontend fixtures not present")
    cfg = parse_config(load_config_file(os.path.join(ROOT, "configs", config_name)))
    document, _rows = run_analysis(cfg)
    with open(fixture_path, "rb") as fh:
        committed = fh.read()
    assert committed == document_bytes(document)


def test_fixture_fields_the_views_read_exist():
    path = os.path.join(FIXTURES, "breakeven_result.json")
    if not os.path.exists(path):
        pytest.skip("frontend fixtures not present")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    result = doc["result"]
    assert {"theta_star", "benchmark_gain", "attained", "points"} <= set(result)
    assert all({"theta", "gain", "gain_minus_benchmark", "equivalent_cost"} <= set(p)
               for p in result["points"])
    with open(os.path.join(FIXTURES, "optimize_result.json"), "r", encoding="utf-8") as fh:
        opt = json.load(fh)["result"]
    assert {"splits", "resulting", "manual", "total_welfare"} <= set(opt)
    assert {"deviation_loss", "welfare", "resulting"} <= set(opt["manual"])
