"""Command-line entry point.

Subcommands:
  run          execute one JSON config and write metrics CSV + summary JSON
  suite        execute every *.json config in a directory and write an
               aligned suite_summary.json
  centralized  fit only the single-machine baseline for a config

Exit codes: 0 success, 2 config error, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .experiments import (
    ConfigError,
    RunAbort,
    build_replicate_refs,
    compare_suite,
    execute,
    load_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to a JSON config (or directory for suite)")
    sub.add_argument("--out", default=None, help="output directory (overrides config output_dir)")
    sub.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
    sub.add_argument("--threads", type=int, default=1, help="parallel replicates")


def _load(path: str, seed_override: int | None):
    config = load_config(path)
    if seed_override is not None:
        config = replace(config, seed=seed_override)
    return config


def _cmd_run(args) -> int:
    config = _load(args.config, args.seed_override)
    path = execute(config, threads=args.threads, out_dir=args.out)
    print(path)
    return EXIT_OK


def _cmd_suite(args) -> int:
    if os.path.isdir(args.config):
        paths = sorted(
            os.path.join(args.config, f)
            for f in os.listdir(args.config)
            if f.endswith(".json")
        )
    else:
        paths = [args.config]
    if not paths:
        raise ConfigError("suite", f"no *.json configs found in {args.config}")
    configs = [_load(p, args.seed_override) for p in paths]
    out = args.out or configs[0].output_dir
    try:
        summary = compare_suite(configs, threads=args.threads, out_dir=out)
    except ValueError as exc:
        raise ConfigError("suite", str(exc)) from exc
    os.makedirs(out, exist_ok=True)
    summary_path = os.path.join(out, "suite_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for s in summary["series"]:
        label = f"{s['algo']}-{s['rule']}/{s['init']} (n={s['n']}, m={s['m']}, {s['metric']})"
        tail = s["values"][-1]
        print(f"{label}: final={tail if tail is None else f'{tail:.6g}'}")
    print(summary_path)
    return EXIT_OK


def _cmd_centralized(args) -> int:
    config = _load(args.config, args.seed_override)
    out = args.out or config.output_dir
    os.makedirs(out, exist_ok=True)
    rows = []
    for r in range(config.replicates):
        refs = build_replicate_refs(config, r)
        err = refs.baseline_err_star()
        test_err = refs.baseline_test_error()
        rows.append(
            {
                "replicate": r,
                "err_star": None if err != err else err,
                "test_error": None if test_err != test_err else test_err,
            }
        )
    path = os.path.join(out, f"{config.run_id}_centralized.json")
    with open(path, "w") as fh:
        json.dump({"run_id": config.run_id, "baseline": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="bcsl",
        description="Byzantine-robust communication-efficient distributed learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", _cmd_run), ("suite", _cmd_suite), ("centralized", _cmd_centralized)):
        p = sub.add_parser(name)
        _common_flags(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAbort as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
