"""Experiment configuration: INI files with ``[experiment]`` and ``[sweep]`` sections.

Example::

    [experiment]
    profile = hyperbolic
    N = 3
    alphas = -3:3:0.5
    tasks = stability, eta
    r_max = 50
    tol = 1e-10
    output_dir = results
    workers = 4

    [sweep]
    profiles = hyperbolic, polyexp:0.75
    N = 2, 3
    alphas = -1, 0, 1
    task = stability

Lists are comma separated; ``start:stop:step`` expands to an inclusive range.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from .errors import ConfigError
from .manifold import parse_profile

TASKS = ("solve", "asymptotics", "stability", "eta", "intersect", "emden", "check-profile")
SOLUTION_TASKS = frozenset({"solve", "asymptotics", "stability", "intersect", "emden"})
MAX_CELLS = 10_000
OUTPUT_ENV = "GELFAND_OUTPUT_DIR"


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "gelfand_output")


def parse_range(text: str) -> tuple:
    """``"a, b, c"`` or ``"start:stop:step"`` (inclusive) to a tuple of floats."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad range {text!r}; expected start:stop:step") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range {text!r}; need step > 0 and stop >= start")
        n = int(round((stop - start) / step)) + 1
        if n > MAX_CELLS:
            raise ConfigError(f"range {text!r} has {n} values, limit is {MAX_CELLS}")
        # round away representation noise so 0.1 steps print as typed
        vals = [round(start + k * step, 12) for k in range(n)]
        return tuple(v for v in vals if v <= stop + 1e-9 * step)
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _int_list(text: str) -> tuple:
    vals = parse_range(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"dimensions must be integers: {text!r}")
    return tuple(int(v) for v in vals)


def _str_list(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    profile: str = "hyperbolic"
    N: int = 3
    alphas: tuple = (0.0,)
    tasks: tuple = ("solve",)
    r_max: Optional[float] = None  # per-profile default when unset
    tol: float = 1e-10
    output_dir: str = field(default_factory=default_output_dir)
    workers: int = 1
    tol_alpha: float = 1e-3
    t_end: float = 40.0
    # sweep grids; empty means "not a sweep"
    sweep_profiles: tuple = ()
    sweep_N: tuple = ()
    sweep_alphas: tuple = ()
    sweep_task: str = "stability"

    def validate(self) -> "ExperimentConfig":
        parse_profile(self.profile)
        if not self.tasks:
            raise ConfigError("tasks must not be empty")
        bad = [t for t in self.tasks if t not in TASKS]
        if bad:
            raise ConfigError(f"unknown tasks {bad}; choose from {', '.join(TASKS)}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"N must be an integer >= 2, got {self.N}")
        if SOLUTION_TASKS.intersection(self.tasks) and not self.alphas:
            raise ConfigError("alphas must not be empty for solution-level tasks")
        if "intersect" in self.tasks and len(set(self.alphas)) < 2:
            raise ConfigError("intersect needs at least two distinct alphas")
        if "eta" in self.tasks and not 2 <= self.N <= 9:
            raise ConfigError("eta task requires 2 <= N <= 9")
        if "emden" in self.tasks and self.N < 3:
            raise ConfigError("emden task requires N >= 3")
        if not 1e-13 <= self.tol <= 1e-6:
            raise ConfigError("tol must lie in [1e-13, 1e-6]")
        if self.r_max is not None and not self.r_max > 0:
            raise ConfigError("r_max must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if not self.tol_alpha > 0:
            raise ConfigError("tol_alpha must be positive")
        if self.is_sweep:
            if self.sweep_task not in TASKS or self.sweep_task in ("intersect", "eta"):
                raise ConfigError("sweep task must be one of solve, asymptotics, stability, emden, check-profile")
            for spec in self.sweep_profiles:
                parse_profile(spec)
            if any(n < 2 for n in self.sweep_N):
                raise ConfigError("sweep dimensions must be >= 2")
            if self.n_cells > MAX_CELLS:
                raise ConfigError(f"sweep has {self.n_cells} cells, limit is {MAX_CELLS}")
        return self

    @property
    def is_sweep(self) -> bool:
        return bool(self.sweep_profiles or self.sweep_N or self.sweep_alphas)

    def grid(self) -> tuple:
        """Sweep axes with the experiment values as fallbacks."""
        return (
            self.sweep_profiles or (self.profile,),
            self.sweep_N or (self.N,),
            self.sweep_alphas or self.alphas,
        )

    @property
    def n_cells(self) -> int:
        p, n, a = self.grid()
        return len(p) * len(n) * len(a)

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


_FIELDS = {
    "profile": str,
    "n": int,
    "alphas": parse_range,
    "tasks": _str_list,
    "r_max": float,
    "tol": float,
    "output_dir": str,
    "workers": int,
    "tol_alpha": float,
    "t_end": float,
}
_SWEEP_FIELDS = {"profiles": _str_list, "n": _int_list, "alphas": parse_range, "task": str}


def _convert(section: str, key: str, raw: str, table: dict):
    try:
        return table[key](raw)
    except KeyError:
        raise ConfigError(f"unknown key {key!r} in [{section}]") from None
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Build a config from INI text; keys present override ``base``."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    unknown = [s for s in cp.sections() if s not in ("experiment", "sweep")]
    if unknown:
        raise ConfigError(f"unknown sections {unknown}")
    cfg = base or ExperimentConfig()
    updates = {}
    if cp.has_section("experiment"):
        for key, raw in cp.items("experiment"):
            val = _convert("experiment", key, raw, _FIELDS)
            updates["N" if key == "n" else key] = val
    if cp.has_section("sweep"):
        names = {"profiles": "sweep_profiles", "n": "sweep_N", "alphas": "sweep_alphas", "task": "sweep_task"}
        for key, raw in cp.items("sweep"):
            updates[names.get(key, key)] = _convert("sweep", key, raw, _SWEEP_FIELDS)
    if "tasks" in updates:
        updates["tasks"] = tuple(updates["tasks"])
    return replace(cfg, **updates).validate()


def load_config(path: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, base)
