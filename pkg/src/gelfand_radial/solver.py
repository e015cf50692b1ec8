"""Radial solutions of ``-Delta_g u = e^u`` and their linearization.

The IVP ``u'' + (N-1)(psi'/psi) u' + e^u = 0, u(0) = alpha, u'(0) = 0`` is
started from a Taylor expansion at a small radius and continued with an
embedded 5(4) Runge-Kutta pair.

Two internal representations are used:

* radius mode, state ``(u, u')`` in ``r``;
* log-radius mode, state ``(w, y)`` in ``s = log r`` with
  ``w = u + 2 s - log(2(N-2))`` and ``y = r u' + 2``.  ``w`` is the
  deviation from the singular solution, so it keeps relative accuracy while
  ``u`` itself drifts to ``-infinity``.

Euclidean runs switch to log-radius mode at ``r = e^{-alpha/2}``, where the
rescaled solution is of unit size; other profiles switch once ``r``
exceeds ``LOG_SWITCH``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ._csv import format_rows
from ._dopri import Trajectory, integrate
from .errors import DimensionError
from .manifold import ProfileKind, WarpProfile

DEFAULT_EPS = 1e-6
DEFAULT_TOL = 1e-10
LOG_SWITCH = 1e3
LYAPUNOV_SLACK = 1e-9


def emden_offset(N: int) -> float:
    """Constant ``log(2(N-2))`` of the Emden shift (0 when ``N = 2``)."""
    return math.log(2.0 * (N - 2)) if N >= 3 else 0.0


def _check_dimension(N: int) -> None:
    if int(N) != N or N < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {N}")


# -- Taylor start --------------------------------------------------------------


@dataclass(frozen=True)
class Series:
    """``phi(r) = c0 + c2 r^2 + c4 r^4 + cp r^p`` near the pole."""

    c0: float
    c2: float
    c4: float
    cp: float
    p: float

    def value(self, r):
        return self.c0 + self.c2 * r**2 + self.c4 * r**4 + self.cp * r**self.p

    def slope(self, r):
        return 2 * self.c2 * r + 4 * self.c4 * r**3 + self.p * self.cp * r ** (self.p - 1)


def linear_series(profile: WarpProfile, N: int, q0: float, q2: float) -> Series:
    """Regular solution of ``phi'' + (N-1)(psi'/psi)phi' + q phi = 0``, ``phi(0) = 1``.

    ``q(r) = q0 + q2 r^2 + ...``.  The ``r^p`` term carries the first
    correction of ``psi'/psi`` to ``1/r``.
    """
    kappa, m = profile.series
    p = m + 3.0
    b2 = -q0 / (2.0 * N)
    b4 = -(q0 * b2 + q2) / (4.0 * (N + 2))
    cp = -2.0 * kappa * (N - 1) * b2 / (p * (p + N - 2))
    return Series(1.0, b2, b4, cp, p)


def solution_series(profile: WarpProfile, N: int, alpha: float) -> Series:
    kappa, m = profile.series
    p = m + 3.0
    ea = math.exp(alpha)
    b2 = -ea / (2.0 * N)
    b4 = -ea * b2 / (4.0 * (N + 2))
    cp = -2.0 * kappa * (N - 1) * b2 / (p * (p + N - 2))
    return Series(alpha, b2, b4, cp, p)


@dataclass(frozen=True)
class TaylorState:
    u_eps: float
    u1_eps: float
    v_eps: float
    v1_eps: float


def taylor_init(profile: WarpProfile, N: int, alpha: float, eps: float) -> TaylorState:
    """States of the solution and of its ``alpha``-derivative at radius ``eps``."""
    if eps > 1e-3 or eps < 0:
        raise ValueError("Taylor handoff radius must lie in [0, 1e-3]")
    us = solution_series(profile, N, alpha)
    ea = math.exp(alpha)
    vs = linear_series(profile, N, ea, ea * us.c2)
    if eps == 0:
        return TaylorState(alpha, 0.0, 1.0, 0.0)
    return TaylorState(us.value(eps), us.slope(eps), vs.value(eps), vs.slope(eps))


# -- solution containers -------------------------------------------------------


@dataclass
class Segment:
    mode: str  # "r" or "log"
    traj: Trajectory

    @property
    def r_start(self) -> float:
        x = self.traj.x0
        return math.exp(x) if self.mode == "log" else x

    @property
    def r_end(self) -> float:
        x = self.traj.x1
        return math.exp(x) if self.mode == "log" else x


def _segment_lookup(segments: List[Segment], r: np.ndarray) -> np.ndarray:
    bounds = np.array([seg.r_end for seg in segments[:-1]])
    return np.searchsorted(bounds, r, side="left")


class _Dense:
    """Shared dense-output plumbing for solution containers."""

    segments: List[Segment]
    eps: float
    offset: float

    @property
    def r_max(self) -> float:
        return self.segments[-1].r_end

    def _log_to_state(self, s: np.ndarray, ys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _series_state(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def state(self, r) -> np.ndarray:
        """Natural state ``(value, d/dr value)`` at radii ``r``; shape ``(n, 2)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r > self.r_max * (1 + 1e-12)) or np.any(r < 0):
            raise ValueError(f"radius outside integrated range [0, {self.r_max:g}]")
        out = np.empty((r.size, 2))
        small = r < self.eps
        if np.any(small):
            out[small] = self._series_state(r[small])
        rest = ~small
        if np.any(rest):
            rr = np.minimum(r[rest], self.r_max)
            which = _segment_lookup(self.segments, rr)
            block = np.empty((rr.size, 2))
            for k, seg in enumerate(self.segments):
                mask = which == k
                if not np.any(mask):
                    continue
                if seg.mode == "r":
                    block[mask] = seg.traj.evaluate(rr[mask])
                else:
                    s = np.log(rr[mask])
                    block[mask] = self._log_to_state(s, seg.traj.evaluate(s))
            out[rest] = block
        return out

    def _segment_at(self, r: float) -> Segment:
        for seg in self.segments:
            if r <= seg.r_end:
                return seg
        return self.segments[-1]

    def _scalar(self, r: float, j: int) -> float:
        """Raw component ``j`` of the stored representation at radius ``r``."""
        seg = self._segment_at(r)
        return seg.traj.component(r if seg.mode == "r" else math.log(r), j)


@dataclass(eq=False)
class RadialSolution(_Dense):
    """Regular radial solution with dense output on ``[0, r_max]``."""

    alpha: float
    dimension: int
    profile: WarpProfile
    eps: float
    tol: float
    segments: List[Segment]
    series: Series
    offset: float
    monotonicity_violations: int = 0
    _nodes: Optional[dict] = field(default=None, repr=False)

    @property
    def profile_id(self) -> str:
        return self.profile.spec

    def _log_to_state(self, s, ys):
        w, y = ys[:, 0], ys[:, 1]
        return np.column_stack([w - 2 * s + self.offset, (y - 2.0) * np.exp(-s)])

    def _series_state(self, r):
        return np.column_stack([self.series.value(r), self.series.slope(r)])

    def u(self, r) -> np.ndarray:
        return self.state(r)[:, 0]

    def u1(self, r) -> np.ndarray:
        return self.state(r)[:, 1]

    def reduced(self, r) -> np.ndarray:
        """``u(r) + 2 log r - log(2(N-2))``; read directly from ``w`` in log-radius mode."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        with np.errstate(divide="ignore"):
            out = self.u(r) + 2 * np.log(r) - self.offset
        which = _segment_lookup(self.segments, r)
        for k, seg in enumerate(self.segments):
            if seg.mode == "log":
                mask = (which == k) & (r >= self.eps)
                if np.any(mask):
                    out[mask] = seg.traj.evaluate(np.log(r[mask]))[:, 0]
        return out

    def reduced_at(self, r: float) -> float:
        """Scalar version of ``reduced`` for root polishing."""
        if r < self.eps:
            return self.series.value(r) + 2 * math.log(r) - self.offset
        seg = self._segment_at(r)
        if seg.mode == "log":
            return seg.traj.component(math.log(r), 0)
        return seg.traj.component(r, 0) + 2 * math.log(r) - self.offset

    def lyapunov(self, r) -> np.ndarray:
        st = self.state(r)
        return 0.5 * st[:, 1] ** 2 + np.exp(st[:, 0])

    @property
    def nodes(self) -> dict:
        """Accepted nodes as arrays ``r, u, u1, F`` (plus ``mode``)."""
        if self._nodes is None:
            rs, us, u1s, modes = [], [], [], []
            for k, seg in enumerate(self.segments):
                x, y, _ = seg.traj.arrays()
                if k > 0:
                    x, y = x[1:], y[1:]
                if seg.mode == "r":
                    rs.append(x)
                    us.append(y[:, 0])
                    u1s.append(y[:, 1])
                else:
                    st = self._log_to_state(x, y)
                    rs.append(np.exp(x))
                    us.append(st[:, 0])
                    u1s.append(st[:, 1])
                modes.append(np.full(x.size, seg.mode))
            r = np.concatenate(rs)
            u = np.concatenate(us)
            u1 = np.concatenate(u1s)
            self._nodes = {
                "r": r,
                "u": u,
                "u1": u1,
                "F": 0.5 * u1**2 + np.exp(u),
                "mode": np.concatenate(modes),
            }
        return self._nodes

    # fast scalar weights for linear equations along this solution

    def exp_u_at(self, r: float) -> float:
        if r < self.eps:
            return math.exp(self.series.value(r))
        seg = self._segment_at(r)
        if seg.mode == "r":
            return math.exp(seg.traj.component(r, 0))
        s = math.log(r)
        return math.exp(seg.traj.component(s, 0) - 2 * s + self.offset)

    def r2_exp_u_at_log(self, s: float) -> float:
        """``r^2 e^{u(r)}`` at ``r = e^s``, read from the log-radius state."""
        r = math.exp(s)
        seg = self._segment_at(r)
        if seg.mode == "log":
            return math.exp(seg.traj.component(s, 0) + self.offset)
        return r * r * math.exp(seg.traj.component(r, 0))

    def to_csv(self, lin: Optional["LinearizedSolution"] = None) -> str:
        nd = self.nodes
        cols = [nd["r"], nd["u"], nd["u1"], nd["F"]]
        header = ["r", "u", "u1", "F"]
        if lin is not None:
            st = lin.state(nd["r"])
            cols += [st[:, 0], st[:, 1]]
            header += ["v", "v1"]
        return format_rows(header, zip(*cols))


@dataclass(eq=False)
class LinearizedSolution(_Dense):
    """Solution of ``v'' + (N-1)(psi'/psi) v' + e^u v = 0``, ``v(0)=1``, ``v'(0)=0``."""

    base: RadialSolution
    eps: float
    segments: List[Segment]
    series: Series
    offset: float = 0.0

    def _log_to_state(self, s, ys):
        return np.column_stack([ys[:, 0], ys[:, 1] * np.exp(-s)])

    def _series_state(self, r):
        return np.column_stack([self.series.value(r), self.series.slope(r)])

    def v(self, r) -> np.ndarray:
        return self.state(r)[:, 0]

    def v1(self, r) -> np.ndarray:
        return self.state(r)[:, 1]

    def value_at(self, r: float) -> float:
        return self._scalar(r, 0)

    @property
    def nodes(self) -> dict:
        rs, vs, v1s = [], [], []
        for k, seg in enumerate(self.segments):
            x, y, _ = seg.traj.arrays()
            if k > 0:
                x, y = x[1:], y[1:]
            if seg.mode == "r":
                rs.append(x)
                vs.append(y[:, 0])
                v1s.append(y[:, 1])
            else:
                rs.append(np.exp(x))
                vs.append(y[:, 0])
                v1s.append(y[:, 1] * np.exp(-x))
        return {"r": np.concatenate(rs), "v": np.concatenate(vs), "v1": np.concatenate(v1s)}


# -- integration ---------------------------------------------------------------


STIFFNESS_CAP = 1.5e4
HYPERBOLIC_RANGE = 50.0
EUCLIDEAN_RANGE = 1e6


def default_r_max(profile: WarpProfile, N: int = 3) -> float:
    """Default integration range: ``1e6`` for Euclidean, else 50.

    Fast-growing profiles are cut where ``(N-1) psi'/psi`` reaches
    ``STIFFNESS_CAP``; beyond it an explicit pair needs tiny steps while the
    solution has long settled.
    """
    if profile.kind is ProfileKind.EUCLIDEAN:
        return EUCLIDEAN_RANGE
    if (N - 1) * profile.rho(HYPERBOLIC_RANGE) <= STIFFNESS_CAP:
        return HYPERBOLIC_RANGE
    lo, hi = 1.0, HYPERBOLIC_RANGE
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if (N - 1) * profile.rho(mid) <= STIFFNESS_CAP:
            lo = mid
        else:
            hi = mid
    return round(lo, 6)


def _handoff_radius(eps: float, alpha: float) -> float:
    # keep e^alpha eps^2 small so the truncated series stays accurate
    return eps * min(1.0, math.exp(-0.5 * alpha))


def _switch_radius(profile: WarpProfile, alpha: float) -> float:
    # Euclidean: leave radius mode once r e^{alpha/2} ~ 1; before that r u' is
    # far below the error scale of the log-mode state and u' would be lost
    return math.exp(-0.5 * alpha) if profile.kind is ProfileKind.EUCLIDEAN else LOG_SWITCH


def _radius_rhs(profile: WarpProfile, N: int):
    rho = profile.rho
    n1 = N - 1

    def rhs(r, y):
        u, u1 = y
        return [u1, -n1 * rho(r) * u1 - math.exp(u)]

    return rhs


def _log_rhs(profile: WarpProfile, N: int):
    r_rho = profile.r_rho
    euclid = profile.kind is ProfileKind.EUCLIDEAN
    n1, n2 = N - 1, N - 2

    if N >= 3:
        def rhs(s, y):
            w, yy = y
            dy = -n2 * yy - 2 * n2 * math.expm1(w)
            if not euclid:
                dy += n1 * (yy - 2.0) * (1.0 - r_rho(math.exp(s)))
            return [yy, dy]
    else:
        def rhs(s, y):
            w, yy = y
            rr = 1.0 if euclid else r_rho(math.exp(s))
            return [yy, (yy - 2.0) * (1.0 - rr) - math.exp(w)]

    return rhs


def _lyapunov_guard(mode: str, offset: float):
    slack = 1.0 + LYAPUNOV_SLACK
    if mode == "r":
        def F(x, y):
            return 0.5 * y[1] * y[1] + math.exp(y[0])
    else:
        def F(x, y):
            d = (y[1] - 2.0) * math.exp(-x)
            return 0.5 * d * d + math.exp(y[0] + offset - 2.0 * x)

    def accept(x0, y0, x1, y1):
        return F(x1, y1) <= F(x0, y0) * slack

    return accept


def integrate_ivp(
    profile: WarpProfile,
    N: int,
    alpha: float,
    r_max: float,
    tol: float = DEFAULT_TOL,
    eps: float = DEFAULT_EPS,
) -> RadialSolution:
    """Integrate the regular radial solution with ``u(0) = alpha`` up to ``r_max``."""
    _check_dimension(N)
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    eps = _handoff_radius(eps, alpha)
    if not r_max > eps:
        raise ValueError("r_max must exceed the Taylor handoff radius")
    series = solution_series(profile, N, alpha)
    offset = emden_offset(N)
    switch = _switch_radius(profile, alpha)
    segments: List[Segment] = []
    u0, u10 = series.value(eps), series.slope(eps)

    if switch > eps:
        r_end = min(r_max, switch)
        traj = integrate(
            _radius_rhs(profile, N), eps, [u0, u10], r_end, tol, atol=tol * 1e-3,
            accept=_lyapunov_guard("r", offset),
        )
        segments.append(Segment("r", traj))
        u0, u10 = traj.y[-1]
        r_start = r_end
    else:
        r_start = eps
    if r_max > r_start:
        s0 = math.log(r_start)
        w0 = u0 + 2 * s0 - offset
        y0 = r_start * u10 + 2.0
        traj = integrate(
            _log_rhs(profile, N), s0, [w0, y0], math.log(r_max), tol, atol=1e-300,
            accept=_lyapunov_guard("log", offset),
        )
        segments.append(Segment("log", traj))
    sol = RadialSolution(alpha, N, profile, eps, tol, segments, series, offset)
    bad = int(np.count_nonzero(sol.nodes["u1"] >= 0))
    if bad:
        sol.monotonicity_violations = bad
        warnings.warn(f"u' >= 0 at {bad} nodes (alpha={alpha:g}, N={N})", RuntimeWarning)
    return sol


def integrate_linear(
    profile: WarpProfile,
    N: int,
    weight: Callable[[float], float],
    weight_log: Callable[[float], float],
    series: Series,
    eps: float,
    r_end: float,
    tol: float,
    switch: float,
    max_zeros: Optional[int] = None,
) -> tuple[List[Segment], int]:
    """Integrate ``phi'' + (N-1)(psi'/psi) phi' + q phi = 0`` from the series start.

    ``weight(r) = q(r)`` is used in radius mode, ``weight_log(s) = r^2 q(r)``
    in log-radius mode (state ``(phi, r phi')``).  Integration stops early once
    ``max_zeros`` sign changes of ``phi`` have been seen.  Returns the segments
    and the number of sign changes crossed.
    """
    rho, r_rho = profile.rho, profile.r_rho
    n1 = N - 1
    zeros = [0]

    def stop(x0, y0, x1, y1):
        if y0[0] * y1[0] < 0 or (y1[0] == 0.0 and y0[0] != 0.0):
            zeros[0] += 1
        return max_zeros is not None and zeros[0] >= max_zeros

    def rhs_r(r, y):
        p, p1 = y
        return [p1, -n1 * rho(r) * p1 - weight(r) * p]

    def rhs_log(s, y):
        p, chi = y
        return [chi, chi * (1.0 - n1 * r_rho(math.exp(s))) - weight_log(s) * p]

    segments: List[Segment] = []
    p0, p10 = series.value(eps), series.slope(eps)
    r_start = eps
    if switch > eps:
        r_stop = min(r_end, switch)
        traj = integrate(rhs_r, eps, [p0, p10], r_stop, tol, atol=1e-300, stop=stop)
        segments.append(Segment("r", traj))
        if max_zeros is not None and zeros[0] >= max_zeros:
            return segments, zeros[0]
        p0, p10 = traj.y[-1]
        r_start = r_stop
    if r_end > r_start:
        s0 = math.log(r_start)
        traj = integrate(rhs_log, s0, [p0, r_start * p10], math.log(r_end), tol, atol=1e-300, stop=stop)
        segments.append(Segment("log", traj))
    return segments, zeros[0]


def integrate_linearized(base: RadialSolution, tol: Optional[float] = None) -> LinearizedSolution:
    """Variational solution ``v = du/dalpha`` along ``base``, reusing its dense output."""
    tol = base.tol if tol is None else tol
    ea = math.exp(base.alpha)
    series = linear_series(base.profile, base.dimension, ea, ea * base.series.c2)
    switch = base.segments[0].r_end if base.segments[0].mode == "r" else base.eps
    segments, _ = integrate_linear(
        base.profile, base.dimension, base.exp_u_at, base.r2_exp_u_at_log,
        series, base.eps, base.r_max, tol, switch,
    )
    return LinearizedSolution(base, base.eps, segments, series)


# -- blow-up rescaling ---------------------------------------------------------


@dataclass(frozen=True)
class BlowupProfile:
    """``v_lambda(s) = u_lambda(lambda s) + 2 log lambda`` on ``[0, S]``."""

    lam: float
    alpha: float
    S: float
    s: np.ndarray
    v: np.ndarray
    v1: np.ndarray
    solution: RadialSolution

    def at(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        st = self.solution.state(self.lam * s)
        v = st[:, 0] + 2 * math.log(self.lam)
        v[s == 0] = 1.0
        return v

    def slope_at(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self.lam * self.solution.state(self.lam * s)[:, 1]


def blowup_rescale(
    profile: WarpProfile, N: int, lam: float, S: float, tol: float = DEFAULT_TOL
) -> BlowupProfile:
    """Solve with ``alpha = log(e / lam^2)`` on ``[0, lam S]`` and rescale to ``[0, S]``."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if not S > 0:
        raise ValueError("S must be positive")
    alpha = 1.0 - 2.0 * math.log(lam)
    sol = integrate_ivp(profile, N, alpha, lam * S, tol)
    nd = sol.nodes
    s = np.concatenate([[0.0], nd["r"] / lam])
    v = np.concatenate([[1.0], nd["u"] + 2 * math.log(lam)])
    v1 = np.concatenate([[0.0], lam * nd["u1"]])
    return BlowupProfile(lam, alpha, S, s, v, v1, sol)
