"""Warping profiles of Riemannian models ``dr^2 + psi(r)^2 dtheta^2``.

Every quantity the solvers consume is exposed as a ratio (``psi'/psi``,
``psi''/psi``, ...) or in log space, because ``psi`` itself overflows a
double quickly for the super-exponential profiles (``e^{r^2}`` at ``r = 30``
is already ``e^900``).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigError

# below this radius psi'/psi is evaluated from its series
SERIES_CUTOFF = 1e-4
_LOG2 = math.log(2.0)


class ProfileKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"
    POLYEXP = "polyexp"
    SPLICED = "spliced"


class TailClass(str, Enum):
    INTEGRABLE = "Integrable"
    NON_INTEGRABLE = "NonIntegrable"


class ProfileValues(NamedTuple):
    psi: float
    psi1: float
    psi2: float
    psi3: Optional[float]


@dataclass(frozen=True)
class AssumptionFlags:
    A1: bool
    A2: bool
    A3: bool
    A4: bool
    A5: bool

    def as_dict(self) -> dict:
        return {"A1": self.A1, "A2": self.A2, "A3": self.A3, "A4": self.A4, "A5": self.A5}


@dataclass(frozen=True)
class WarpProfile:
    """Immutable warping function.

    Build through :func:`euclidean`, :func:`hyperbolic`, :func:`polyexp`,
    :func:`make_spliced_profile` or :func:`parse_profile`.
    """

    kind: ProfileKind
    gamma: Optional[float] = None
    a: Optional[float] = None
    r0: Optional[float] = None
    delta: Optional[float] = None
    # quintic coefficients of log(psi) on [r0, r0 + delta], in powers of (r - r0)
    blend: tuple = field(default=(), repr=False)
    log_c: Optional[float] = field(default=None, repr=False)
    assumption_flags: Optional[AssumptionFlags] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind is ProfileKind.POLYEXP:
            if self.gamma is None or not self.gamma > 0.5:
                raise ValueError(f"polyexp profile needs gamma > 1/2, got {self.gamma}")
        if self.kind is ProfileKind.SPLICED:
            if self.a is None or not self.a > 1.0:
                raise ValueError(f"spliced profile needs a > 1, got {self.a}")
            if self.r0 is None or not self.r0 > 0.0:
                raise ValueError(f"spliced profile needs r0 > 0, got {self.r0}")
            if not self.blend:
                raise ValueError("spliced profiles must be built with make_spliced_profile")

    # -- identity -----------------------------------------------------------

    @property
    def spec(self) -> str:
        if self.kind is ProfileKind.POLYEXP:
            return f"polyexp:{self.gamma:g}"
        if self.kind is ProfileKind.SPLICED:
            return f"spliced:{self.a:g}:{self.r0:g}"
        return self.kind.value

    @property
    def lambda_limit(self) -> float:
        """``lim psi'/psi`` as r grows (``inf`` for the super-exponential kinds)."""
        if self.kind is ProfileKind.EUCLIDEAN:
            return 0.0
        if self.kind is ProfileKind.HYPERBOLIC:
            return 1.0
        return math.inf

    @property
    def series(self) -> tuple[float, float]:
        """``(kappa, m)`` with ``psi'/psi = 1/r + kappa r^m + ...`` near the pole."""
        if self.kind is ProfileKind.EUCLIDEAN:
            return 0.0, 1.0
        if self.kind is ProfileKind.POLYEXP:
            k = 2.0 * self.gamma
            return k, k - 1.0
        return 1.0 / 3.0, 1.0

    # -- point evaluation -----------------------------------------------------

    def _k(self) -> float:
        return 2.0 * self.gamma

    def _region(self, r: float) -> int:
        # 0: sinh core, 1: blend, 2: exponential tail
        if r <= self.r0:
            return 0
        if r < self.r0 + self.delta:
            return 1
        return 2

    def _log_derivs(self, r: float) -> tuple[float, float, float, float]:
        """``(L, L', L'', L''')`` for ``L = log psi`` on the spliced blend/tail."""
        reg = self._region(r)
        if reg == 1:
            t = r - self.r0
            c = self.blend
            L = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
            L1 = c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))
            L2 = 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))
            L3 = 6 * c[3] + t * (24 * c[4] + t * 60 * c[5])
            return L, L1, L2, L3
        a = self.a
        return (
            self.log_c + r**a,
            a * r ** (a - 1),
            a * (a - 1) * r ** (a - 2),
            a * (a - 1) * (a - 2) * r ** (a - 3),
        )

    def eval(self, r: float) -> ProfileValues:
        """Raw ``(psi, psi', psi'', psi''')``; may overflow to ``inf`` for large r."""
        if r < 0:
            raise ValueError("radius must be nonnegative")
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return ProfileValues(r, 1.0, 0.0, 0.0)
        if kind is ProfileKind.HYPERBOLIC or (kind is ProfileKind.SPLICED and self._region(r) == 0):
            s, c = math.sinh(r), math.cosh(r)
            return ProfileValues(s, c, s, c)
        if kind is ProfileKind.POLYEXP:
            k = self._k()
            if r == 0.0:
                p3 = 6.0 if k == 2.0 else (0.0 if k > 2.0 else None)
                return ProfileValues(0.0, 1.0, 0.0, p3)
            rk = r**k
            try:
                E = math.exp(rk)
            except OverflowError:
                E = math.inf
            psi = r * E
            psi1 = E * (1 + k * rk)
            psi2 = E * k * r ** (k - 1) * (1 + k + k * rk)
            psi3 = E * (
                k * k * r ** (2 * k - 2) * (1 + 2 * k + k * rk)
                + k * (k - 1) * r ** (k - 2) * (1 + k + k * rk)
            )
            return ProfileValues(psi, psi1, psi2, psi3)
        L, L1, L2, L3 = self._log_derivs(r)
        try:
            psi = math.exp(L)
        except OverflowError:
            psi = math.inf
        return ProfileValues(
            psi,
            psi * L1,
            psi * (L2 + L1 * L1),
            psi * (L3 + 3 * L1 * L2 + L1**3),
        )

    def rho(self, r: float) -> float:
        """``psi'(r)/psi(r)`` for ``r > 0``."""
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return 1.0 / r
        if kind is ProfileKind.POLYEXP:
            k = self._k()
            return 1.0 / r + k * r ** (k - 1)
        if kind is ProfileKind.SPLICED and self._region(r) > 0:
            return self._log_derivs(r)[1]
        if r < SERIES_CUTOFF:
            return 1.0 / r + r / 3.0
        return 1.0 / math.tanh(r)

    def r_rho(self, r: float) -> float:
        """``r psi'/psi``; equals 1 at the pole for every profile."""
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return 1.0
        if kind is ProfileKind.POLYEXP:
            k = self._k()
            return 1.0 + k * r**k
        if kind is ProfileKind.SPLICED and self._region(r) > 0:
            return r * self._log_derivs(r)[1]
        if r < SERIES_CUTOFF:
            return 1.0 + r * r / 3.0
        return r / math.tanh(r)

    def psi2_over_psi(self, r: float) -> float:
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return 0.0
        if kind is ProfileKind.POLYEXP:
            k = self._k()
            return k * r ** (k - 2) * (1 + k + k * r**k)
        if kind is ProfileKind.SPLICED and self._region(r) > 0:
            _, L1, L2, _ = self._log_derivs(r)
            return L2 + L1 * L1
        return 1.0

    def log_psi(self, r: float) -> float:
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return math.log(r)
        if kind is ProfileKind.POLYEXP:
            return math.log(r) + r ** self._k()
        if kind is ProfileKind.SPLICED and self._region(r) > 0:
            return self._log_derivs(r)[0]
        if r < 20.0:
            return math.log(math.sinh(r))
        return r - _LOG2 + math.log1p(-math.exp(-2.0 * r))

    def log_psi1(self, r: float) -> float:
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return 0.0
        if kind is ProfileKind.POLYEXP:
            k = self._k()
            rk = r**k
            return rk + math.log1p(k * rk)
        if kind is ProfileKind.SPLICED and self._region(r) > 0:
            L, L1, _, _ = self._log_derivs(r)
            return L + math.log(L1)
        return r - _LOG2 + math.log1p(math.exp(-2.0 * r))

    def log_psi1_dd(self, r: float) -> float:
        """``[log psi']'' = psi'''/psi' - (psi''/psi')^2``, without cancellation."""
        kind = self.kind
        if kind is ProfileKind.EUCLIDEAN:
            return 0.0
        if kind is ProfileKind.HYPERBOLIC or (kind is ProfileKind.SPLICED and self._region(r) == 0):
            return 1.0 / math.cosh(r) ** 2 if r < 300 else 0.0
        if kind is ProfileKind.POLYEXP:
            # log psi' = r^k + log(1 + k r^k)
            k = self._k()
            rk = r**k
            g = 1 + k * rk
            d1 = k * k * r ** (k - 1)
            d2 = k * k * (k - 1) * r ** (k - 2)
            return k * (k - 1) * r ** (k - 2) + d2 / g - (d1 / g) ** 2
        if self._region(r) == 2:
            a = self.a
            return (a - 1) / r**2 * (a * r**a - 1)
        _, L1, L2, L3 = self._log_derivs(r)
        p2 = (L2 + L1 * L1) / L1
        p3 = (L3 + 3 * L1 * L2 + L1**3) / L1
        return p3 - p2 * p2

    def sectional_curvature(self, r: float) -> float:
        """Radial sectional curvature ``-psi''/psi``."""
        return -self.psi2_over_psi(r)


# -- constructors --------------------------------------------------------------


def euclidean() -> WarpProfile:
    return WarpProfile(ProfileKind.EUCLIDEAN)


def hyperbolic() -> WarpProfile:
    return WarpProfile(ProfileKind.HYPERBOLIC)


def polyexp(gamma: float) -> WarpProfile:
    return WarpProfile(ProfileKind.POLYEXP, gamma=float(gamma))


def _quintic_blend(r0: float, r1: float, left: Sequence[float], right: Sequence[float]) -> tuple:
    d = r1 - r0
    A = np.array(
        [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0],
            [0, 0, 2, 0, 0, 0],
            [1, d, d**2, d**3, d**4, d**5],
            [0, 1, 2 * d, 3 * d**2, 4 * d**3, 5 * d**4],
            [0, 0, 2, 6 * d, 12 * d**2, 20 * d**3],
        ],
        dtype=float,
    )
    return tuple(float(c) for c in np.linalg.solve(A, np.array([*left, *right], dtype=float)))


def make_spliced_profile(a: float, r0: float, delta: Optional[float] = None) -> WarpProfile:
    """``sinh r`` up to ``r0``, ``c e^{r^a}`` beyond ``r0 + delta``.

    ``log psi`` is joined by a quintic matching value, first and second
    derivatives at both ends. ``c`` is fixed so the tail passes through
    ``sinh(r0)`` at ``r0``. The width is halved until the blend is
    increasing.
    """
    a, r0 = float(a), float(r0)
    if not a > 1.0:
        raise ValueError(f"spliced profile needs a > 1, got {a}")
    if not r0 >= 1.0:
        raise ValueError(f"spliced profile needs r0 >= 1, got {r0}")
    log_c = math.log(math.sinh(r0)) - r0**a
    left = (math.log(math.sinh(r0)), 1.0 / math.tanh(r0), -1.0 / math.sinh(r0) ** 2)
    width = r0 / 10.0 if delta is None else float(delta)
    for _ in range(30):
        r1 = r0 + width
        right = (log_c + r1**a, a * r1 ** (a - 1), a * (a - 1) * r1 ** (a - 2))
        coef = _quintic_blend(r0, r1, left, right)
        t = np.linspace(0.0, width, 401)
        slope = coef[1] + t * (2 * coef[2] + t * (3 * coef[3] + t * (4 * coef[4] + t * 5 * coef[5])))
        if np.all(slope > 0):
            return WarpProfile(
                ProfileKind.SPLICED, a=a, r0=r0, delta=width, blend=coef, log_c=log_c
            )
        width /= 2.0
    raise ValueError(f"no monotone blend found for spliced profile a={a}, r0={r0}")


def parse_profile(text: str) -> WarpProfile:
    """Parse ``hyperbolic | euclidean | polyexp:<gamma> | spliced:<a>:<r0>``."""
    parts = [p.strip() for p in text.strip().lower().split(":")]
    head = parts[0]
    try:
        if head == "euclidean" and len(parts) == 1:
            return euclidean()
        if head == "hyperbolic" and len(parts) == 1:
            return hyperbolic()
        if head == "polyexp" and len(parts) == 2:
            return polyexp(float(parts[1]))
        if head == "spliced" and len(parts) == 3:
            return make_spliced_profile(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"invalid profile {text!r}: {exc}") from exc
    raise ConfigError(f"unknown profile specification {text!r}")


# -- operations ----------------------------------------------------------------


def eval_profile(profile: WarpProfile, r: float) -> ProfileValues:
    return profile.eval(r)


def log_derivative(profile: WarpProfile, r: float) -> float:
    if not r > 0:
        raise ValueError("log_derivative needs r > 0")
    return profile.rho(r)


class _CumulativeIntegral:
    """Cumulative ``int_0^r psi/psi'`` anchored at fixed knots.

    Knots sit at ``KNOT_BASE * 2^(j/2)`` whatever the query order, so a value
    does not depend on which radii were requested before.
    """

    KNOT_BASE = 1e-3

    def __init__(self, profile: WarpProfile):
        self.profile = profile
        self.values = [self._piece(0.0, self.KNOT_BASE)]
        self.lock = threading.Lock()

    def _integrand(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        return 1.0 / self.profile.rho(s)

    def _piece(self, a: float, b: float) -> float:
        val, _ = integrate.quad(self._integrand, a, b, epsabs=1e-300, epsrel=1e-12, limit=200)
        return val

    def _knot(self, j: int) -> float:
        return self.KNOT_BASE * 2.0 ** (0.5 * j)

    def __call__(self, r: float) -> float:
        if r <= self.KNOT_BASE:
            return self._piece(0.0, r)
        j = int(math.floor(2.0 * math.log2(r / self.KNOT_BASE)))
        while self._knot(j) > r:
            j -= 1
        with self.lock:
            while len(self.values) <= j:
                k = len(self.values)
                self.values.append(self.values[-1] + self._piece(self._knot(k - 1), self._knot(k)))
            base = self.values[j]
        return base + self._piece(self._knot(j), r)


_INTEGRAL_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def psi_ratio_integral(profile: WarpProfile, r: float) -> float:
    """``int_0^r psi(s)/psi'(s) ds`` by adaptive quadrature."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 0:
        return 0.0
    key = (profile.kind, profile.gamma, profile.a, profile.r0, profile.delta)
    with _CACHE_LOCK:
        integral = _INTEGRAL_CACHE.get(key)
        if integral is None:
            integral = _INTEGRAL_CACHE[key] = _CumulativeIntegral(profile)
    return integral(float(r))


def classify_tail(profile: WarpProfile) -> TailClass:
    """Integrability of ``psi/psi'`` at infinity, decided per kind."""
    kind = profile.kind
    if kind is ProfileKind.POLYEXP:
        # psi/psi' ~ r^{1-2 gamma} / (2 gamma)
        return TailClass.INTEGRABLE if profile.gamma > 1.0 else TailClass.NON_INTEGRABLE
    if kind is ProfileKind.SPLICED:
        # psi/psi' = r^{1-a} / a
        return TailClass.INTEGRABLE if profile.a > 2.0 else TailClass.NON_INTEGRABLE
    return TailClass.NON_INTEGRABLE


@dataclass(frozen=True)
class AssumptionReport:
    flags: AssumptionFlags
    first_violation: dict
    profile: WarpProfile

    @property
    def all_pass(self) -> bool:
        return all(self.flags.as_dict().values())


def _rel_close(x: float, target: float, rtol: float = 1e-8) -> bool:
    return abs(x - target) <= rtol * max(1.0, abs(target))


def check_assumptions(profile: WarpProfile, grid: Sequence[float]) -> AssumptionReport:
    """Numerically test (A1)-(A5) on ``grid``; never raises on a violation."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 4 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a sorted sequence of at least 4 positive radii")
    first: dict = {}

    def flag(name: str, bad: np.ndarray) -> bool:
        idx = np.flatnonzero(bad)
        if idx.size:
            first[name] = float(grid[idx[0]])
            return False
        return True

    v0 = profile.eval(0.0)
    a1_pole = _rel_close(v0.psi, 0.0) and _rel_close(v0.psi1, 1.0) and _rel_close(v0.psi2, 0.0)
    log_psi = np.array([profile.log_psi(r) for r in grid])
    a1 = flag("A1", ~np.isfinite(log_psi)) and a1_pole
    if not a1_pole:
        first["A1"] = 0.0

    rho = np.array([profile.rho(r) for r in grid])
    a2 = flag("A2", ~(rho > 0))

    lam = profile.lambda_limit
    tail = grid >= grid[0] + 0.75 * (grid[-1] - grid[0])
    if lam == 0.0:
        a3 = False
        first["A3"] = float(grid[-1])
    elif math.isinf(lam):
        # rho must keep growing across the tail
        bad = np.zeros(grid.size, bool)
        bad[1:] = tail[1:] & tail[:-1] & (np.diff(rho) <= 0)
        a3 = flag("A3", bad)
    else:
        dev = np.abs(rho - lam)
        bad = np.zeros(grid.size, bool)
        bad[1:] = tail[1:] & tail[:-1] & (np.diff(dev) > 1e-12)
        a3 = flag("A3", bad)
        if a3 and dev[-1] > 1e-6 * max(1.0, lam):
            a3 = False
            first["A3"] = float(grid[-1])

    if math.isinf(lam):
        dlog = np.gradient(np.log(rho), grid)
        half = grid.size // 2
        bound = np.max(np.abs(dlog[:half])) + 1.0
        a4 = flag("A4", np.concatenate([np.zeros(half, bool), np.abs(dlog[half:]) > bound]))
    else:
        a4 = True

    a5_vals = np.array([profile.log_psi1_dd(r) for r in grid])
    a5 = flag("A5", ~(a5_vals > 0))

    flags = AssumptionFlags(a1, a2, a3, a4, a5)
    return AssumptionReport(flags, first, replace(profile, assumption_flags=flags))
