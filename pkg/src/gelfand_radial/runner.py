"""Run configured experiments and parameter sweeps, writing CSV files and a manifest.

Every per-alpha task is expressed as a grid cell ``(profile, N, alpha)``.  An
experiment is a sweep over its alphas, so a one-cell sweep and a single run
write the same bytes.  Cells run in a process pool when ``workers > 1`` and
are always aggregated in grid order.
"""

from __future__ import annotations

import itertools
import json
import os
import platform
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import metadata
from typing import Callable, Dict, List, Optional

import numpy as np

from . import asymptotics, emden, intersections, stability
from ._csv import format_rows
from .config import ExperimentConfig
from .errors import ConfigError, GelfandError, NumericalError, PartialFailure
from .manifold import ProfileKind, check_assumptions, parse_profile
from .solver import default_r_max, integrate_ivp, integrate_linearized

MANIFEST = "manifest.json"


@dataclass(frozen=True)
class CellResult:
    index: int
    header: tuple
    rows: list
    info: dict
    error: Optional[str] = None


# -- per-cell tasks ------------------------------------------------------------


def _r_max(cfg: ExperimentConfig, profile, N: int) -> float:
    return cfg.r_max if cfg.r_max is not None else default_r_max(profile, N)


def _cell_solve(cfg, profile, N, alpha):
    sol = integrate_ivp(profile, N, alpha, _r_max(cfg, profile, N), cfg.tol)
    lin = integrate_linearized(sol)
    nd = sol.nodes
    st = lin.state(nd["r"])
    rows = list(zip(nd["r"], nd["u"], nd["u1"], nd["F"], st[:, 0], st[:, 1]))
    info = {"r_max": sol.r_max, "nodes": len(rows), "monotonicity_violations": sol.monotonicity_violations}
    return ("r", "u", "u1", "F", "v", "v1"), rows, info


def _cell_asymptotics(cfg, profile, N, alpha):
    sol = integrate_ivp(profile, N, alpha, _r_max(cfg, profile, N), cfg.tol)
    rep = asymptotics.classify_limit(sol, profile, extrapolate=True)
    rows = [
        (r, ratio, rate, rate_logr)
        for (r, ratio), (_, rate, rate_logr) in zip(rep.decay_ratio_tail, rep.log_rate_tail)
    ]
    info = {"limit_kind": rep.limit_kind.value, "limit_value": rep.limit_value, "tail_bound": rep.tail_bound}
    if rep.extrapolated is not None:
        info["extrapolated"] = {
            "rate": rep.extrapolated.rate,
            "ratio": rep.extrapolated.ratio,
            "r_pair": list(rep.extrapolated.r_pair),
            "label": rep.extrapolated.label,
        }
    return ("r", "ratio", "rate", "rate_logr"), rows, info


def _cell_stability(cfg, profile, N, alpha):
    v = stability.stability_test(profile, N, alpha, _r_max(cfg, profile, N), cfg.tol)
    return stability.VERDICT_HEADER, [v.csv_row()], {"decision": v.decision.name, "radius": v.decision.radius}


def _cell_emden(cfg, profile, N, alpha):
    sol = integrate_ivp(profile, N, alpha, _r_max(cfg, profile, N), cfg.tol)
    if profile.kind is ProfileKind.EUCLIDEAN:
        traj = emden.integrate_autonomous(N, emden.phase_start(sol, 1.0), cfg.t_end, cfg.tol)
        rows = list(zip(traj.t, traj.y, traj.z, traj.angle_cum))
        return ("t", "y", "z", "angle_cum"), rows, {"turns": traj.turns, "diverged": traj.diverged}
    tr = emden.emden_transform(sol, profile, N)
    info = {"barrier_gap": tr.barrier_gap, "residual": tr.residual}
    return ("r", "v", "V"), list(zip(tr.r, tr.v, tr.V)), info


def _cell_check_profile(cfg, profile, N, alpha):
    grid = np.geomspace(0.1, min(_r_max(cfg, profile, N), 50.0), 200)
    rep = check_assumptions(profile, grid)
    rows = []
    for r in grid:
        p = profile.eval(float(r))
        rows.append((float(r), p.psi, p.psi1, p.psi2, p.psi3, profile.rho(float(r))))
    info = {"flags": rep.flags.as_dict(), "first_violation": rep.first_violation}
    return ("r", "psi", "psi1", "psi2", "psi3", "log_derivative"), rows, info


CELL_TASKS: Dict[str, Callable] = {
    "solve": _cell_solve,
    "asymptotics": _cell_asymptotics,
    "stability": _cell_stability,
    "emden": _cell_emden,
    "check-profile": _cell_check_profile,
}
# tasks whose rows already carry alpha
_HAS_ALPHA = {"stability"}
# tasks that do not depend on alpha
_ALPHA_FREE = {"check-profile"}


def _run_cell(args) -> CellResult:
    index, task, cfg, spec, N, alpha = args
    try:
        header, rows, info = CELL_TASKS[task](cfg, parse_profile(spec), N, alpha)
        return CellResult(index, tuple(header), rows, info)
    except Exception as exc:  # isolate the cell; the aggregator reports it
        msg = f"{type(exc).__name__}: {exc}"
        return CellResult(index, (), [], {"traceback": traceback.format_exc(limit=3)}, msg)


def _execute(cells: List[tuple], workers: int) -> List[CellResult]:
    if workers <= 1 or len(cells) <= 1:
        results = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            results = list(pool.map(_run_cell, cells))
    return sorted(results, key=lambda c: c.index)


def _aggregate(task: str, grid: tuple, results: List[CellResult]) -> tuple:
    """Merge cell rows in grid order, prefixing only axes with several values."""
    profiles, Ns, alphas = grid
    if task in _ALPHA_FREE:
        alphas = alphas[:1]
    prefix = []
    if len(profiles) > 1:
        prefix.append("profile")
    if len(Ns) > 1:
        prefix.append("N")
    if len(alphas) > 1 and task not in _HAS_ALPHA:
        prefix.append("alpha")
    header = None
    rows = []
    for res, (spec, N, alpha) in zip(results, itertools.product(profiles, Ns, alphas)):
        if res.error is not None:
            continue
        if header is None:
            header = res.header
        elif res.header != header:
            raise ConfigError(f"task {task} produced differing columns across cells")
        tag = []
        if "profile" in prefix:
            tag.append(spec)
        if "N" in prefix:
            tag.append(N)
        if "alpha" in prefix:
            tag.append(alpha)
        rows.extend(tuple(tag) + tuple(r) for r in res.rows)
    return tuple(prefix) + tuple(header or ()), rows


def _cells(task: str, grid: tuple, cfg: ExperimentConfig) -> List[tuple]:
    profiles, Ns, alphas = grid
    if task in _ALPHA_FREE:
        alphas = alphas[:1] or (0.0,)
    return [
        (i, task, cfg, spec, N, alpha)
        for i, (spec, N, alpha) in enumerate(itertools.product(profiles, Ns, alphas))
    ]


def _cell_report(task: str, grid: tuple, results: List[CellResult]) -> list:
    profiles, Ns, alphas = grid
    if task in _ALPHA_FREE:
        alphas = alphas[:1] or (0.0,)
    out = []
    for res, (spec, N, alpha) in zip(results, itertools.product(profiles, Ns, alphas)):
        entry = {"profile": spec, "N": N, "alpha": alpha, "status": "ok" if res.error is None else "failed"}
        if res.error is None:
            entry.update(res.info)
        else:
            entry["error"] = res.error
        out.append(entry)
    return out


# -- whole-run tasks -----------------------------------------------------------


def _task_intersect(cfg: ExperimentConfig):
    profile = parse_profile(cfg.profile)
    r_max = _r_max(cfg, profile, cfg.N)
    alphas = sorted(set(cfg.alphas), reverse=True)
    sols = {a: integrate_ivp(profile, cfg.N, a, r_max, cfg.tol) for a in alphas}
    rows, notes, pairs = [], [], []
    for a, b in itertools.combinations(alphas, 2):
        rep = intersections.find_intersections(sols[a], sols[b], r_max)
        rows.extend((a, b, k + 1, r) for k, r in enumerate(rep.crossings))
        notes.append(f"# summary: alpha={a!r} beta={b!r} crossings={rep.count} min_gap={rep.min_gap!r}\n")
        pairs.append({"alpha": a, "beta": b, "crossings": rep.count, "min_gap": rep.min_gap, "tangencies": len(rep.tangencies)})
    text = format_rows(("alpha", "beta", "k", "crossing_r"), rows) + "".join(notes)
    return text, {"pairs": pairs, "r_max": r_max}


def _task_eta(cfg: ExperimentConfig):
    profile = parse_profile(cfg.profile)
    spec = stability.bottom_of_spectrum(profile, cfg.N)
    est = stability.threshold_eta(
        profile, cfg.N, r_max=cfg.r_max, tol_alpha=cfg.tol_alpha, tol=cfg.tol, log_lambda1=spec.log_value
    )
    text = format_rows(stability.ETA_HEADER, [est.csv_row()])
    info = {
        "eta_hat": est.eta_hat,
        "log_lambda1_hat": est.log_lambda1_hat,
        "lambda1_hat": spec.value,
        "lambda1_uncertainty": spec.uncertainty,
        "r_max": est.r_max,
        "probes": [list(p) for p in est.probes],
    }
    return text, info


WHOLE_TASKS = {"intersect": _task_intersect, "eta": _task_eta}


# -- driver --------------------------------------------------------------------


def _versions() -> dict:
    import scipy

    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"package": pkg, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _tolerances(cfg: ExperimentConfig) -> dict:
    return {"tol": cfg.tol, "tol_alpha": cfg.tol_alpha, "r_max": cfg.r_max}


def _finish(cfg: ExperimentConfig, manifest: dict, failed: list, total: int) -> dict:
    manifest["failed"] = failed
    _write(os.path.join(cfg.output_dir, MANIFEST), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if failed and len(failed) == total:
        raise NumericalError(f"all {total} units failed: {failed[0]['error']}")
    if failed:
        raise PartialFailure(f"{len(failed)} of {total} units failed", failed)
    return manifest


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute every task of ``cfg``; one CSV per task plus ``manifest.json``."""
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    manifest = {
        "inputs": cfg.as_dict(),
        "versions": _versions(),
        "tolerances": _tolerances(cfg),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "tasks": {},
    }
    failed = []
    grid = ((cfg.profile,), (cfg.N,), tuple(cfg.alphas))
    for task in cfg.tasks:
        t0 = time.perf_counter()
        fname = f"{task}.csv"
        entry: dict = {"file": fname}
        if task in WHOLE_TASKS:
            try:
                text, info = WHOLE_TASKS[task](cfg)
                _write(os.path.join(cfg.output_dir, fname), text)
                entry.update(status="ok", results=info)
            except GelfandError as exc:
                entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
                failed.append({"task": task, "error": entry["error"]})
        else:
            results = _execute(_cells(task, grid, cfg), cfg.workers)
            header, rows = _aggregate(task, grid, results)
            _write(os.path.join(cfg.output_dir, fname), format_rows(header, rows))
            cells = _cell_report(task, grid, results)
            entry.update(status="ok" if all(c["status"] == "ok" for c in cells) else "partial", cells=cells)
            failed.extend({"task": task, **c} for c in cells if c["status"] != "ok")
        entry["wall_time"] = time.perf_counter() - t0
        manifest["tasks"][task] = entry
    return _finish(cfg, manifest, failed, _unit_count(cfg))


def _unit_count(cfg: ExperimentConfig) -> int:
    n = 0
    for task in cfg.tasks:
        if task in WHOLE_TASKS:
            n += 1
        elif task in _ALPHA_FREE:
            n += 1
        else:
            n += len(cfg.alphas)
    return n


def sweep(cfg: ExperimentConfig, output_name: str = "sweep.csv") -> dict:
    """Run ``cfg.sweep_task`` over the profile x N x alpha grid into one CSV."""
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    task = cfg.sweep_task
    grid = cfg.grid()
    if task == "emden":
        kinds = {parse_profile(p).kind is ProfileKind.EUCLIDEAN for p in grid[0]}
        if len(kinds) > 1:
            raise ConfigError("emden sweeps cannot mix Euclidean and curved profiles")
    t0 = time.perf_counter()
    cells = _cells(task, grid, cfg)
    results = _execute(cells, cfg.workers)
    header, rows = _aggregate(task, grid, results)
    _write(os.path.join(cfg.output_dir, output_name), format_rows(header, rows))
    report = _cell_report(task, grid, results)
    manifest = {
        "inputs": cfg.as_dict(),
        "versions": _versions(),
        "tolerances": _tolerances(cfg),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "sweep": {"task": task, "file": output_name, "cells": report, "wall_time": time.perf_counter() - t0},
    }
    failed = [c for c in report if c["status"] != "ok"]
    return _finish(cfg, manifest, failed, len(report))
