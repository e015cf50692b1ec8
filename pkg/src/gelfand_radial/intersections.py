"""Crossings between pairs of radial solutions.

The difference ``u_alpha - u_beta`` is formed from the reduced variables
``u + 2 log r - log(2(N-2))`` of both runs.  In log-radius mode those are
the integrated states themselves, so differences far below the size of ``u``
keep their sign and their digits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._csv import format_rows
from .errors import RangeMismatch, TangencyWarning
from .solver import RadialSolution

ROOT_XTOL = 1e-10
TANGENCY_LEVEL = 1e-10
MAX_ITER = 60


@dataclass(frozen=True)
class IntersectionReport:
    alpha: float
    beta: float
    crossings: tuple
    tangencies: tuple
    r_range: tuple  # (0, r_max)
    min_gap: float  # min of u_alpha - u_beta over the scan grid

    @property
    def count(self) -> int:
        return len(self.crossings)

    @property
    def ordered(self) -> bool:
        return not self.crossings and self.min_gap > 0

    def to_csv(self) -> str:
        rows = [(self.alpha, self.beta, k + 1, r) for k, r in enumerate(self.crossings)]
        text = format_rows(("alpha", "beta", "k", "crossing_r"), rows)
        return text + f"# summary: crossings={self.count} min_gap={self.min_gap!r} r_max={self.r_range[1]!r}\n"


def _merged_grid(sa: RadialSolution, sb: RadialSolution, r_max: float) -> np.ndarray:
    r = np.union1d(sa.nodes["r"], sb.nodes["r"])
    r = r[r <= r_max]
    if r[-1] < r_max:
        r = np.append(r, r_max)
    mid = 0.5 * (r[:-1] + r[1:])
    return np.union1d(r, mid)


def find_intersections(sol_a: RadialSolution, sol_b: RadialSolution, r_max: Optional[float] = None) -> IntersectionReport:
    """Sign changes of ``u_alpha - u_beta`` on ``(0, r_max]`` with ``alpha > beta``."""
    if sol_a.profile_id != sol_b.profile_id or sol_a.dimension != sol_b.dimension:
        raise ValueError("solutions must share profile and dimension")
    if sol_a.alpha == sol_b.alpha:
        raise ValueError("alpha and beta must differ")
    if sol_a.alpha < sol_b.alpha:
        sol_a, sol_b = sol_b, sol_a
    reach = min(sol_a.r_max, sol_b.r_max)
    r_max = reach if r_max is None else float(r_max)
    if r_max > reach * (1 + 1e-12):
        raise RangeMismatch(f"r_max={r_max:g} exceeds the integrated range {reach:g}")
    r_max = min(r_max, reach)

    r = _merged_grid(sol_a, sol_b, r_max)
    d = sol_a.reduced(r) - sol_b.reduced(r)

    def diff(x: float) -> float:
        return sol_a.reduced_at(x) - sol_b.reduced_at(x)

    crossings = []
    for k in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0):
        root = brentq(diff, r[k], r[k + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER, disp=False)
        crossings.append(float(root))
    for k in np.flatnonzero(d == 0.0):
        if 0 < k < d.size - 1 and d[k - 1] * d[k + 1] < 0:
            crossings.append(float(r[k]))
    crossings = sorted(set(crossings))

    a = np.abs(d)
    tang = []
    if a.size >= 3:
        mins = (a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]) & (a[1:-1] < TANGENCY_LEVEL)
        mins &= d[:-2] * d[2:] > 0
        tang = [float(x) for x in r[1:-1][mins]]
    if tang:
        warnings.warn(f"near-tangential contact at r={tang[0]:.6g}", TangencyWarning)
    return IntersectionReport(
        float(sol_a.alpha), float(sol_b.alpha), tuple(crossings), tuple(tang), (0.0, r_max), float(np.min(d))
    )
