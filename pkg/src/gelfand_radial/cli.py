"""Command line entry point ``gelfand-radial``.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures, 4 when only some tasks or sweep cells failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import List, Optional

from .config import TASKS, ExperimentConfig, default_output_dir, load_config, parse_range
from .errors import ConfigError, NumericalError, PartialFailure
from .runner import MANIFEST, run_experiment, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 2, 3, 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file; its values override command line flags")
    p.add_argument("--profile", default=None, help="hyperbolic | euclidean | polyexp:<gamma> | spliced:<a>:<r0>")
    p.add_argument("-N", "--dimension", type=int, default=None, dest="N")
    p.add_argument("--alphas", default=None, help="comma list or start:stop:step")
    p.add_argument("--r-max", type=float, default=None, dest="r_max")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--output-dir", default=None, dest="output_dir", help="defaults to $GELFAND_OUTPUT_DIR")
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gelfand-radial", description="Radial solutions of -Delta u = e^u on model manifolds.")
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        _common(p)
        if task == "eta":
            p.add_argument("--tol-alpha", type=float, default=None, dest="tol_alpha")
        if task == "emden":
            p.add_argument("--t-end", type=float, default=None, dest="t_end")
    p = sub.add_parser("run", help="run all tasks listed in a config file")
    _common(p)
    p = sub.add_parser("sweep", help="run one task over a profile x N x alpha grid")
    _common(p)
    p.add_argument("--profiles", default=None, help="comma separated profile specs")
    p.add_argument("--dims", default=None, help="dimensions, comma list or start:stop:step")
    p.add_argument("--task", default=None, help="task run in every cell (default stability)")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(output_dir=default_output_dir())
    upd = {}
    for key in ("profile", "N", "r_max", "tol", "output_dir", "workers", "tol_alpha", "t_end"):
        val = getattr(args, key, None)
        if val is not None:
            upd[key] = val
    if args.alphas is not None:
        upd["alphas"] = parse_range(args.alphas)
    if args.command == "sweep":
        if args.profiles:
            upd["sweep_profiles"] = tuple(p.strip() for p in args.profiles.split(",") if p.strip())
        if args.dims:
            upd["sweep_N"] = tuple(int(v) for v in parse_range(args.dims))
        if args.task:
            upd["sweep_task"] = args.task
        if args.alphas is not None:
            upd["sweep_alphas"] = upd["alphas"]
    elif args.command != "run":
        upd["tasks"] = (args.command,)
    cfg = replace(cfg, **upd)
    if args.config:
        cfg = load_config(args.config, cfg)
    return cfg.validate()


def _summary(manifest: dict) -> str:
    out = {}
    for task, entry in manifest.get("tasks", {}).items():
        out[task] = {k: entry[k] for k in ("file", "status") if k in entry}
        if "results" in entry and "eta_hat" in entry["results"]:
            out[task]["eta_hat"] = entry["results"]["eta_hat"]
    if "sweep" in manifest:
        out["sweep"] = {"file": manifest["sweep"]["file"], "cells": len(manifest["sweep"]["cells"])}
    return json.dumps(out, sort_keys=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        manifest = sweep(cfg) if args.command == "sweep" or (args.command == "run" and cfg.is_sweep) else run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PartialFailure as exc:
        print(f"partial failure: {exc}; see {MANIFEST}", file=sys.stderr)
        return EXIT_PARTIAL
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(_summary(manifest))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
