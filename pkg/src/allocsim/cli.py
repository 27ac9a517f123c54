"""Command-line interface: batch analyses, fixture generation, serving.

Every analysis run writes three files into --out: result.json (the
structured document), table.csv or table.json (one row per grid cell),
and manifest.json (config hash, seed, engine version, wall time).
result.json and the table are byte-identical across repeated runs and
worker counts; only the manifest carries timing.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 analysis
error.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .config import load_config_file, parse_config
from .errors import AllocsimError, ConfigError, DataError
from .population import save_population
from .reporting import config_hash, run_analysis, write_outputs
from .synth import generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ANALYSIS = 4

SUBCOMMAND_TO_ANALYSIS = {
    "evaluate": "evaluate",
    "curve": "curve",
    "break-even": "break_even",
    "equiv-cost": "equivalent_cost",
    "ratio-grid": "ratio_grid",
    "optimize": "optimize_budget",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="allocsim",
        description="Welfare simulation for comparing policy levers in "
        "prediction-based resource allocation.",
    )
    parser.add_argument("--version", action="version", version=f"allocsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_common(p, needs_out=True):
        p.add_argument("--config", required=True, help="scenario config (YAML)")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--seed-override", type=int, default=None, help="replace the policy seed")
        p.add_argument(
            "--format", choices=("json", "csv"), default="csv", help="flat table format"
        )

    add_common(sub.add_parser("validate", help="parse and validate a config"), needs_out=False)
    for name, kind in SUBCOMMAND_TO_ANALYSIS.items():
        p = sub.add_parser(name, help=f"run the {kind} analysis")
        add_common(p)

    p = sub.add_parser("synth", help="generate a synthetic population CSV")
    p.add_argument("--config", required=True, help="config with a synth section")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed-override", type=int, default=None)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--inline-threshold", type=int, default=2000,
                   help="grid cells beyond which analyses become polled jobs")
    p.add_argument("--workers", type=int, default=1, help="sweep workers per analysis")
    return parser


def _run_validate(args) -> int:
    mapping = load_config_file(args.config)
    cfg = parse_config(mapping, seed_override=args.seed_override)
    s = cfg.scenario
    print(f"config {args.config}: OK (hash {config_hash(mapping)[:12]})")
    print(
        f"population: N={s.population.size} labeled={s.population.labeled_share():.3f} "
        f"direction={s.population.outcome_direction}"
    )
    print(f"utility: {type(s.utility).__name__}")
    print(f"constraint: capacity={s.constraint.capacity} slots={s.constraint.slots}")
    print(f"masks: {sorted(cfg.masks)}; levers: {sorted(cfg.levers)}")
    print(f"analysis: {cfg.analysis['kind']}")
    return EXIT_OK


def _run_analysis_command(args, expected_kind: str) -> int:
    mapping = load_config_file(args.config)
    cfg = parse_config(mapping, seed_override=args.seed_override)
    if cfg.analysis["kind"] != expected_kind:
        raise ConfigError(
            f"config declares analysis {cfg.analysis['kind']!r}; "
            f"this subcommand runs {expected_kind!r}",
            field="analysis.kind",
        )
    started = time.perf_counter()
    document, rows = run_analysis(cfg, workers=args.workers)
    wall = time.perf_counter() - started
    paths = write_outputs(
        args.out,
        document,
        rows,
        table_format=args.format,
        wall_time_s=wall,
        workers=args.workers,
    )
    print(f"wrote {paths['result']}")
    print(f"wrote {paths['table']}")
    print(f"wrote {paths['manifest']}")
    return EXIT_OK


def _run_synth(args) -> int:
    mapping = load_config_file(args.config)
    synth_section = mapping.get("synth")
    if synth_section is None:
        raise ConfigError("config has no synth section", field="synth")
    from .config import build_synth_spec

    spec = build_synth_spec(synth_section)
    if args.seed_override is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed_override)
    pop = generate(spec)
    save_population(pop, args.out)
    print(f"wrote {args.out} ({pop.size} records)")
    return EXIT_OK


def _run_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(inline_threshold=args.inline_threshold, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _run_validate(args)
        if args.command in SUBCOMMAND_TO_ANALYSIS:
            return _run_analysis_command(args, SUBCOMMAND_TO_ANALYSIS[args.command])
        if args.command == "synth":
            return _run_synth(args)
        if args.command == "serve":
            return _run_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except AllocsimError as err:
        print(f"analysis error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
