"""Emden variables and the planar phase portrait.

With ``v = u + 2 log psi - log(2(N-2))`` the singular Euclidean solution
``log(2(N-2)/r^2)`` becomes ``v = 0``.  In Euclidean space and ``t = log r``
the pair ``(y, z) = (v', v)`` solves the autonomous system

    y' = -(N-2) y - 2(N-2)(e^z - 1),    z' = y,

whose linearization at the origin has characteristic polynomial
``P(l) = l^2 + (N-2) l + 2(N-2)``.  The roots are complex for ``N <= 9`` and
real from ``N = 10`` on, which separates oscillating (crossing, unstable)
solutions from ordered (stable) ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np

from ._csv import format_rows
from ._dopri import Trajectory, integrate
from .errors import DimensionError
from .manifold import ProfileKind, WarpProfile
from .solver import RadialSolution

DIVERGENCE_LIMIT = 50.0
EXCLUSION_RADIUS = 1e-8


def _require_emden_dimension(N: int) -> None:
    if N < 3:
        raise DimensionError("the Emden shift log(2(N-2)) needs N >= 3")


class PhaseState(NamedTuple):
    y: float  # w'(t)
    z: float  # w(t)
    t: float


# -- characteristic roots ------------------------------------------------------


class RootKind(str, Enum):
    COMPLEX_FOCUS = "ComplexFocus"
    REAL_DEGENERATE = "RealDegenerate"
    REAL_NODE = "RealNode"


@dataclass(frozen=True)
class SpectralSummary:
    N: int
    roots: tuple  # (complex, complex), larger real part first for real roots
    classification: RootKind
    discriminant: int

    @property
    def slow_root(self) -> float:
        return max(z.real for z in self.roots)


def char_poly(N: int, lam: complex) -> complex:
    return lam * lam + (N - 2) * lam + 2 * (N - 2)


def char_roots(N: int) -> SpectralSummary:
    """Roots of ``P`` from the quadratic formula; the discriminant is the integer ``(N-2)(N-10)``."""
    _require_emden_dimension(N)
    disc = (N - 2) * (N - 10)
    half = -(N - 2) / 2.0
    if disc < 0:
        im = math.sqrt(-disc) / 2.0
        roots = (complex(half, im), complex(half, -im))
        kind = RootKind.COMPLEX_FOCUS
    elif disc == 0:
        roots = (complex(half), complex(half))
        kind = RootKind.REAL_DEGENERATE
    else:
        sq = math.isqrt(disc)
        s = float(sq) if sq * sq == disc else math.sqrt(disc)
        roots = (complex((-(N - 2) + s) / 2.0), complex((-(N - 2) - s) / 2.0))
        kind = RootKind.REAL_NODE
    return SpectralSummary(N, roots, kind, disc)


def lambda_one(N: int) -> float:
    """The more negative root ``(-(N-2) - sqrt((N-2)(N-10)))/2``, defined for ``N >= 10``."""
    if N < 10:
        raise DimensionError("the real root exists only for N >= 10")
    return char_roots(N).roots[-1].real


# -- transform of radial solutions ---------------------------------------------


@dataclass(frozen=True)
class EmdenTrace:
    r: np.ndarray
    v: np.ndarray
    V: np.ndarray  # barrier 2 log psi'
    residual: float  # max scaled residual of the transformed equation

    @property
    def barrier_gap(self) -> float:
        """``max (v - V)``; negative when the barrier holds."""
        return float(np.max(self.v - self.V))


def _node_second_derivative(sol: RadialSolution) -> np.ndarray:
    """``u''`` at the accepted nodes, from the stored right-hand sides."""
    out = []
    for k, seg in enumerate(sol.segments):
        x, y, f = seg.traj.arrays()
        if k > 0:
            x, y, f = x[1:], y[1:], f[1:]
        if seg.mode == "r":
            out.append(f[:, 1])
        else:
            # u' = (Y - 2)/r and d/ds = r d/dr
            r = np.exp(x)
            out.append((f[:, 1] - (y[:, 1] - 2.0)) / (r * r))
    return np.concatenate(out)


def emden_transform(sol: RadialSolution, profile: Optional[WarpProfile] = None, N: Optional[int] = None) -> EmdenTrace:
    """``v = u + 2 log psi - log(2(N-2))`` and ``V = 2 log psi'`` on the node grid.

    The residual of the equation satisfied by ``v`` is evaluated from the
    stored ``u, u', u''`` and scaled by the size of its largest term.
    """
    profile = sol.profile if profile is None else profile
    N = sol.dimension if N is None else N
    _require_emden_dimension(N)
    nd = sol.nodes
    r = nd["r"]
    log_r = np.log(r)
    log_psi = np.array([profile.log_psi(x) for x in r])
    v = sol.reduced(r) + 2.0 * (log_psi - log_r)
    V = 2.0 * np.array([profile.log_psi1(x) for x in r])

    rho = np.array([profile.rho(x) for x in r])
    p2 = np.array([profile.psi2_over_psi(x) for x in r])
    u1 = nd["u1"]
    u2 = _node_second_derivative(sol)
    v1 = u1 + 2.0 * rho
    v2 = u2 + 2.0 * (p2 - rho * rho)
    terms = np.stack(
        [
            v2,
            (N - 1) * rho * v1,
            2 * (N - 2) * np.exp(v - 2.0 * log_psi),
            -2 * (N - 2) * rho * rho,
            -2.0 * p2,
        ]
    )
    res = np.abs(terms.sum(axis=0)) / np.max(np.abs(terms), axis=0)
    return EmdenTrace(r, v, V, float(np.max(res)))


def phase_start(sol: RadialSolution, r: float = 1.0) -> PhaseState:
    """Phase point of a Euclidean radial solution at radius ``r``."""
    if sol.profile.kind is not ProfileKind.EUCLIDEAN:
        raise ValueError("the autonomous system describes Euclidean solutions only")
    _require_emden_dimension(sol.dimension)
    z = float(sol.reduced(r)[0])
    y = float(r * sol.u1(r)[0] + 2.0)
    return PhaseState(y, z, math.log(r))


# -- autonomous flow -----------------------------------------------------------


@dataclass(frozen=True)
class PhaseTrajectory:
    N: int
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    angle_cum: np.ndarray
    diverged: bool
    dense: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    def at(self, t) -> np.ndarray:
        """Dense ``(y, z)`` at times ``t``; shape ``(n, 2)``."""
        return self.dense.evaluate(t)

    @property
    def turns(self) -> int:
        """Completed turns around the origin."""
        return int(abs(self.angle_cum[-1]) // (2 * math.pi))

    def states(self) -> list:
        return [PhaseState(float(a), float(b), float(c)) for a, b, c in zip(self.y, self.z, self.t)]

    def to_csv(self) -> str:
        return format_rows(("t", "y", "z", "angle_cum"), zip(self.t, self.y, self.z, self.angle_cum))


def autonomous_rhs(N: int) -> Callable:
    n2 = N - 2

    def rhs(t, s):
        y, z = s
        return [-n2 * y - 2 * n2 * math.expm1(z), y]

    return rhs


def cumulative_angle(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Unwrapped polar angle of ``(y, z)``; frozen inside the exclusion disk."""
    theta = np.arctan2(z, y)
    inside = np.hypot(y, z) < EXCLUSION_RADIUS
    out = np.zeros_like(theta)
    acc, prev = 0.0, None
    for k in range(theta.size):
        if inside[k]:
            out[k] = acc
            continue
        if prev is not None:
            d = theta[k] - prev
            d = (d + math.pi) % (2 * math.pi) - math.pi
            acc += d
        prev = theta[k]
        out[k] = acc
    return out


def integrate_autonomous(N: int, start: PhaseState, t_end: float, tol: float = 1e-10) -> PhaseTrajectory:
    """Integrate the planar system from ``start`` to ``t_end``.

    Integration stops early if ``|z|`` exceeds ``DIVERGENCE_LIMIT``, which
    means the start lies outside the set reached from regular solutions.
    """
    _require_emden_dimension(N)
    if not t_end > start.t:
        raise ValueError("t_end must exceed the start time")
    diverged = [False]

    def stop(x0, s0, x1, s1):
        if abs(s1[1]) > DIVERGENCE_LIMIT:
            diverged[0] = True
            return True
        return False

    traj = integrate(autonomous_rhs(N), start.t, [start.y, start.z], t_end, tol, atol=1e-300, stop=stop)
    x, s, _ = traj.arrays()
    # midpoints keep the angle increments well below pi
    mid = 0.5 * (x[:-1] + x[1:])
    t = np.empty(2 * x.size - 1)
    t[0::2] = x
    t[1::2] = mid
    st = np.empty((t.size, 2))
    st[0::2] = s
    if mid.size:
        st[1::2] = traj.evaluate(mid)
    y, z = st[:, 0], st[:, 1]
    return PhaseTrajectory(N, t, y, z, cumulative_angle(y, z), diverged[0], traj)


def tail_decay_rate(traj: PhaseTrajectory, t0: float, t1: float) -> float:
    """Least-squares slope of ``log |z|`` on ``[t0, t1]``."""
    m = (traj.t >= t0) & (traj.t <= t1) & (np.abs(traj.z) > 0)
    return float(np.polyfit(traj.t[m], np.log(np.abs(traj.z[m])), 1)[0])


# -- comparison operator -------------------------------------------------------


def L_operator(profile: WarpProfile, N: int, r: float, phi: float, phi1: float, phi2: float) -> float:
    """``phi'' + (N-1)(psi'/psi) phi' + 2(N-2)(psi'/psi)^2 phi`` at ``r``."""
    rho = profile.rho(r)
    return phi2 + (N - 1) * rho * phi1 + 2 * (N - 2) * rho * rho * phi


class BarrierValue(NamedTuple):
    operator: float  # L Z / Z with Z = psi^lambda, from the operator
    closed_form: float  # lambda psi''/psi


def barrier_LZ(profile: WarpProfile, N: int, r: float, lam: Optional[float] = None) -> BarrierValue:
    """``L Z / Z`` for ``Z = psi^lam``, from the operator and from the root identity.

    Dividing by ``Z`` keeps the values finite where ``psi`` overflows.
    """
    lam = lambda_one(N) if lam is None else lam
    rho = profile.rho(r)
    p2 = profile.psi2_over_psi(r)
    z1 = lam * rho
    z2 = lam * (lam - 1) * rho * rho + lam * p2
    op = L_operator(profile, N, r, 1.0, z1, z2)
    # P(lam) = 0 removes the rho^2 term
    closed = lam * p2
    return BarrierValue(op, closed)
