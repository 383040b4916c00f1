"""Command-line front end.

Subcommands::

    simulate  --preset NAME | --config FILE  [--mode elastic|plastic]
              [--impacts N] [--out DIR]
    ensemble  --config FILE | --preset NAME  [--out DIR] [--workers N]
    validate  --config FILE
    presets

Exit codes: 0 success, 2 configuration error, 3 engine error (partial
outputs are flushed before exiting).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

from .errors import BilliardError, ConfigError
from .experiments import (
    PRESET_NAMES,
    ScenarioConfig,
    load_config,
    preset,
    run_ensemble,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENGINE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhbilliards", description="Rolling-disk billiard experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write trajectory/events/summary files")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario name")
    src.add_argument("--config", help="path to a JSON scenario config")
    sim.add_argument("--mode", choices=("elastic", "plastic"), help="override the impact map")
    sim.add_argument("--impacts", type=int, help="override the impact cap")
    sim.add_argument("--out", help="output directory (overrides config output_dir)")

    ens = sub.add_parser("ensemble", help="run the perturbation ensemble and write snapshot files")
    esrc = ens.add_mutually_exclusive_group(required=True)
    esrc.add_argument("--config", help="path to a JSON scenario config with an ensemble section")
    esrc.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario name")
    ens.add_argument("--out", help="output directory (overrides config output_dir)")
    ens.add_argument("--workers", type=int, help="parallel map width (default: min(8, count))")

    val = sub.add_parser("validate", help="check a config file and exit")
    val.add_argument("--config", required=True)

    sub.add_parser("presets", help="list the built-in scenarios")
    return parser


def _resolve_config(preset_name: Optional[str], config_path: Optional[str]) -> ScenarioConfig:
    if preset_name is not None:
        return preset(preset_name)
    return load_config(config_path)


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.preset, args.config)
    engine = cfg.engine
    if args.mode is not None:
        engine = replace(engine, impact_mode=args.mode)
    if args.impacts is not None:
        engine = replace(engine, max_impacts=args.impacts)
    cfg = replace(cfg, engine=engine)
    result = run_scenario(cfg, out_dir=args.out)
    summary = result.summary
    print(
        f"wrote {result.out_dir}: {summary['impact_count']} events, "
        f"termination={summary['termination']}, energy_drift_rel={summary['energy_drift_rel']:.3e}"
    )
    if summary["termination"] == "error":
        print(f"engine error: {summary['error_message']}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def _cmd_ensemble(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.preset, args.config)
    result = run_ensemble(cfg, out_dir=args.out, workers=args.workers)
    summary = result.summary
    failed = summary["failed_members"]
    print(
        f"wrote {result.out_dir}: {summary['count']} members, "
        f"{len(summary['snapshot_files'])} snapshots, {len(failed)} failed"
    )
    if failed:
        print(f"failed members: {failed}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    mode = cfg.engine.impact_mode
    ens = f", ensemble of {cfg.ensemble.count}" if cfg.ensemble else ""
    print(f"OK: {args.config} ({mode} mode, table a={cfg.table.a} b={cfg.table.b}{ens})")
    return EXIT_OK


def _cmd_presets(_: argparse.Namespace) -> int:
    for name in PRESET_NAMES:
        cfg = preset(name)
        ens = f" ensemble={cfg.ensemble.count}x" if cfg.ensemble else ""
        print(
            f"{name}: mode={cfg.engine.impact_mode} table a={cfg.table.a} b={cfg.table.b} "
            f"max_impacts={cfg.engine.max_impacts}{ens}"
        )
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "ensemble": _cmd_ensemble,
        "validate": _cmd_validate,
        "presets": _cmd_presets,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BilliardError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
