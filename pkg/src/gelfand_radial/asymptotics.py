"""Behaviour of radial solutions at infinity.

When ``psi/psi'`` is integrable the solution has a finite limit.  Otherwise
``u -> -infinity`` with

    e^{-u(r)} / I(r) -> 1/(N-1),    u(r) / log I(r) -> -1,

where ``I(r) = int_0^r psi/psi'``.  Both limits are approached only
logarithmically, so the report lists the ratios on a geometric grid over the
tail rather than a single number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional

import numpy as np

from ._csv import format_rows
from .errors import DomainError, InsufficientRange
from .manifold import TailClass, WarpProfile, classify_tail, psi_ratio_integral
from .solver import RadialSolution

SLOPE_LIMIT = 1e-4
TAIL_FRACTION = 0.25
N_PROBES = 32


class LimitKind(str, Enum):
    FINITE = "FiniteLimit"
    LOG_DIVERGENCE = "LogDivergence"


class LogRate(NamedTuple):
    rate: float  # u / log I
    rate_logr: Optional[float]  # u / log r, reported when Lambda is finite


@dataclass(frozen=True)
class Extrapolation:
    """Two-point extrapolation of the tail rates.

    Heuristic: the log-rate is assumed linear in ``1/log I`` and the decay
    ratio linear in ``1/I``; no convergence rate backs either assumption.
    """

    rate: float
    ratio: float
    r_pair: tuple
    label: str = "heuristic: rate linear in 1/log I, ratio linear in 1/I"


@dataclass(frozen=True)
class AsymptoticReport:
    limit_kind: LimitKind
    limit_value: Optional[float]
    tail_bound: Optional[float]
    decay_ratio_tail: tuple  # ((r, ratio), ...)
    log_rate_tail: tuple  # ((r, rate, rate_logr), ...)
    extrapolated: Optional[Extrapolation] = None

    def to_csv(self) -> str:
        rows = [
            (r, ratio, rate, rate_logr)
            for (r, ratio), (_, rate, rate_logr) in zip(self.decay_ratio_tail, self.log_rate_tail)
        ]
        return format_rows(("r", "ratio", "rate", "rate_logr"), rows)


def tail_probes(r_max: float, n: int = N_PROBES) -> np.ndarray:
    return np.geomspace((1.0 - TAIL_FRACTION) * r_max, r_max, n)


def _limit_kind(profile: WarpProfile) -> LimitKind:
    if classify_tail(profile) is TailClass.INTEGRABLE:
        return LimitKind.FINITE
    return LimitKind.LOG_DIVERGENCE


def _require_divergent(profile: WarpProfile) -> None:
    if _limit_kind(profile) is LimitKind.FINITE:
        raise DomainError(f"{profile.spec}: psi/psi' is integrable, u has a finite limit")


def _log_integral(profile: WarpProfile, r: float) -> float:
    I = psi_ratio_integral(profile, r)
    if I <= 0:
        raise DomainError(f"integral vanishes at r={r:g}")
    return math.log(I)


def decay_ratio(sol: RadialSolution, profile: WarpProfile, r: float) -> float:
    """``e^{-u(r)} / int_0^r psi/psi'``, formed in log space."""
    _require_divergent(profile)
    u = float(sol.u(r)[0])
    return math.exp(-u - _log_integral(profile, r))


def log_rate(sol: RadialSolution, profile: WarpProfile, r: float) -> LogRate:
    """``u(r) / log I(r)`` and, for finite ``Lambda``, ``u(r) / log r``."""
    _require_divergent(profile)
    L = _log_integral(profile, r)
    if L <= 1.0:
        raise DomainError(f"log-rate needs int_0^r psi/psi' > e (r={r:g})")
    u = float(sol.u(r)[0])
    rate_logr = u / math.log(r) if math.isfinite(profile.lambda_limit) and r > 1.0 else None
    return LogRate(u / L, rate_logr)


def _tail_bound(sol: RadialSolution) -> float:
    """Bound on ``u(r_max) - lim u`` from the decay of ``|u'|`` over the last decade.

    ``|u'|`` is fitted by a power ``r^{-p}``; the tail integral
    ``|u'(R)| R / (p - 1)`` is returned, or ``inf`` when ``p <= 1``.
    """
    R = sol.r_max
    rs = np.geomspace(R / 10.0, R, 16)
    du = np.abs(sol.u1(rs))
    if np.any(du <= 0):
        return 0.0
    p = -np.polyfit(np.log(rs), np.log(du), 1)[0]
    if p <= 1.0:
        return math.inf
    return float(du[-1] * R / (p - 1.0))


def extrapolate_rates(sol: RadialSolution, profile: WarpProfile, r1: float, r2: float) -> Extrapolation:
    """Eliminate a ``c / log I`` correction using the rates at ``r1 < r2``."""
    L1, L2 = _log_integral(profile, r1), _log_integral(profile, r2)
    q1, q2 = log_rate(sol, profile, r1).rate, log_rate(sol, profile, r2).rate
    rate = (L2 * q2 - L1 * q1) / (L2 - L1)
    # e^{-u} = I/(N-1) + O(1) makes the ratio linear in 1/I instead
    I1, I2 = math.exp(L1), math.exp(L2)
    d1, d2 = decay_ratio(sol, profile, r1), decay_ratio(sol, profile, r2)
    ratio = (I2 * d2 - I1 * d1) / (I2 - I1)
    return Extrapolation(rate, ratio, (r1, r2))


def classify_limit(sol: RadialSolution, profile: Optional[WarpProfile] = None, extrapolate: bool = False) -> AsymptoticReport:
    """Classify ``lim u`` and tabulate the decay quantities over the tail of the run."""
    profile = sol.profile if profile is None else profile
    kind = _limit_kind(profile)
    R = sol.r_max
    if kind is LimitKind.FINITE:
        slope = abs(float(sol.u1(R)[0]))
        if slope >= SLOPE_LIMIT:
            raise InsufficientRange(f"|u'(r_max)| = {slope:.3g} >= {SLOPE_LIMIT:g}; integrate further")
        return AsymptoticReport(kind, float(sol.u(R)[0]), _tail_bound(sol), (), ())
    ratios: List[tuple] = []
    rates: List[tuple] = []
    for r in tail_probes(R):
        r = float(r)
        if _log_integral(profile, r) <= 1.0:
            continue
        ratios.append((r, decay_ratio(sol, profile, r)))
        lr = log_rate(sol, profile, r)
        rates.append((r, lr.rate, lr.rate_logr))
    ext = None
    if extrapolate and _log_integral(profile, R / 2.0) > 1.0:
        ext = extrapolate_rates(sol, profile, R / 2.0, R)
    return AsymptoticReport(kind, None, None, tuple(ratios), tuple(rates), ext)
