"""Stability of radial solutions via Sturm oscillation of the linearized solution.

A zero of ``v = du/dalpha`` at ``R`` makes ``v`` restricted to ``B_R`` a
Dirichlet eigenfunction with eigenvalue 0 of the linearized operator, so the
quadratic form vanishes on it and ``u`` is unstable.  Positivity of ``v`` up to
``r_max`` is reported as ``StableUpTo(r_max)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, BracketFailure, NonMonotoneWitness, SupportError, TangencyWarning
from .manifold import WarpProfile
from .solver import (
    DEFAULT_TOL,
    DEFAULT_EPS,
    LinearizedSolution,
    RadialSolution,
    integrate_ivp,
    integrate_linear,
    integrate_linearized,
    default_r_max,
    linear_series,
)

TANGENCY_LEVEL = 1e-10
ROOT_XTOL = 1e-12

# Gauss-Legendre nodes on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


# -- verdicts ------------------------------------------------------------------


@dataclass(frozen=True)
class UnstableAt:
    r_star: float
    certificate: float

    name = "UnstableAt"

    @property
    def radius(self) -> float:
        return self.r_star


@dataclass(frozen=True)
class StableUpTo:
    r_max: float

    name = "StableUpTo"

    @property
    def radius(self) -> float:
        return self.r_max


@dataclass(frozen=True)
class StabilityVerdict:
    alpha: float
    decision: object  # UnstableAt | StableUpTo
    weighted_eig: Optional[tuple] = None  # (R, Lambda(B_R, alpha))
    method_agreement: Optional[bool] = None
    base: Optional[RadialSolution] = field(default=None, repr=False, compare=False)
    linearized: Optional[LinearizedSolution] = field(default=None, repr=False, compare=False)

    @property
    def stable(self) -> bool:
        return isinstance(self.decision, StableUpTo)

    def csv_row(self) -> tuple:
        lam = self.weighted_eig[1] if self.weighted_eig else None
        cert = self.decision.certificate if isinstance(self.decision, UnstableAt) else None
        return (self.alpha, self.decision.name, self.decision.radius, lam, cert)


VERDICT_HEADER = ("alpha", "decision", "r_star_or_rmax", "Lambda_R", "certificate")


# -- zeros ---------------------------------------------------------------------


def first_zero(lin: LinearizedSolution) -> Optional[float]:
    """Smallest radius where ``v`` changes sign, refined on the dense output."""
    nd = lin.nodes
    r, v = nd["r"], nd["v"]
    sign_change = np.flatnonzero(v[:-1] * v[1:] < 0)
    exact = np.flatnonzero(v[1:] == 0.0)
    candidates = []
    if sign_change.size:
        candidates.append(sign_change[0])
    if exact.size:
        candidates.append(exact[0])
    if candidates:
        k = min(candidates)
        if v[k + 1] == 0.0:
            return float(r[k + 1])
        return brentq(lin.value_at, r[k], r[k + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)
    _check_tangency(r, v)
    return None


def _check_tangency(r: np.ndarray, v: np.ndarray) -> None:
    a = np.abs(v)
    if a.size < 3:
        return
    interior = (a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]) & (a[1:-1] < TANGENCY_LEVEL * np.max(a))
    if np.any(interior):
        k = np.flatnonzero(interior)[0] + 1
        warnings.warn(f"v touches zero without sign change near r={r[k]:.6g}", TangencyWarning)


# -- quadratic form ------------------------------------------------------------


def _form_parts(profile: WarpProfile, base: RadialSolution, x: np.ndarray, val: np.ndarray, der: np.ndarray, w: np.ndarray):
    """Gradient and potential parts of the form from values at quadrature nodes."""
    N = base.dimension
    flat = x.ravel()
    log_w = (N - 1) * np.array([profile.log_psi(t) if t > 0 else -math.inf for t in flat])
    weight = np.exp(log_w) * w.ravel()
    eu = np.exp(base.u(flat))
    grad = float(np.sum(der.ravel() ** 2 * weight))
    pot = float(np.sum(eu * val.ravel() ** 2 * weight))
    return grad, pot


def quadratic_form(
    profile: WarpProfile,
    base: RadialSolution,
    r: Sequence[float],
    chi: Sequence[float],
    chi1: Optional[Sequence[float]] = None,
    normalized: bool = False,
) -> float:
    """``int (chi')^2 psi^{N-1} - int e^u chi^2 psi^{N-1}`` for a radial test function.

    ``chi`` is given by samples on ``r`` and is taken to vanish beyond the
    last sample.  Without ``chi1`` the samples are joined piecewise linearly;
    with derivative samples a cubic Hermite interpolant is used.  With
    ``normalized`` the value is divided by the gradient term, which makes it
    independent of the scale of ``chi`` and of ``psi``.
    """
    r = np.asarray(r, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if r.size < 2 or np.any(np.diff(r) <= 0):
        raise ValueError("sample radii must be strictly increasing")
    if r[-1] > base.r_max * (1 + 1e-12):
        raise SupportError(f"test function extends to {r[-1]:g} past r_max={base.r_max:g}")
    if not np.any(chi):
        return 0.0
    h = np.diff(r)
    x = r[:-1, None] + h[:, None] * _GL_X[None, :]
    th = np.broadcast_to(_GL_X[None, :], x.shape)
    if chi1 is None:
        val = chi[:-1, None] + (chi[1:] - chi[:-1])[:, None] * th
        der = np.broadcast_to(((chi[1:] - chi[:-1]) / h)[:, None], x.shape)
    else:
        chi1 = np.asarray(chi1, dtype=float)
        y0, y1 = chi[:-1, None], chi[1:, None]
        f0, f1, hh = chi1[:-1, None], chi1[1:, None], h[:, None]
        th2, th3 = th * th, th * th * th
        val = (2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * hh * f0 + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * hh * f1
        der = (6 * th2 - 6 * th) * y0 / hh + (3 * th2 - 4 * th + 1) * f0 + (-6 * th2 + 6 * th) * y1 / hh + (3 * th2 - 2 * th) * f1
    grad, pot = _form_parts(profile, base, x, val, der, h[:, None] * _GL_W[None, :])
    return (grad - pot) / grad if normalized else grad - pot


def instability_certificate(lin: LinearizedSolution, r_star: float) -> float:
    """Normalized quadratic form of ``v`` cut off at its first zero.

    Both ``v`` and ``v'`` are read from the dense output at Gauss nodes of
    the accepted steps; the exact value is 0.
    """
    base = lin.base
    nd = lin.nodes
    r = np.concatenate([[0.0], nd["r"][nd["r"] < r_star], [r_star]])
    h = np.diff(r)
    x = r[:-1, None] + h[:, None] * _GL_X[None, :]
    st = lin.state(x.ravel())
    grad, pot = _form_parts(base.profile, base, x, st[:, 0], st[:, 1], h[:, None] * _GL_W[None, :])
    return (grad - pot) / grad


# -- stability decision --------------------------------------------------------


CERTIFICATE_TOL = 1e-12


def _certificate_run(base: RadialSolution, r_star: float) -> LinearizedSolution:
    # the form is only needed on [0, r_star], so a tighter rerun is cheap
    if base.tol <= CERTIFICATE_TOL:
        return integrate_linearized(base)
    short = integrate_ivp(base.profile, base.dimension, base.alpha, min(r_star * 1.01, base.r_max), CERTIFICATE_TOL)
    return integrate_linearized(short)


def stability_test(
    profile: WarpProfile,
    N: int,
    alpha: float,
    r_max: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    cross_check: bool = False,
) -> StabilityVerdict:
    """Decide stability of ``u_alpha`` from the sign of the linearized solution."""
    r_max = default_r_max(profile, N) if r_max is None else r_max
    base = integrate_ivp(profile, N, alpha, r_max, tol)
    lin = integrate_linearized(base)
    rz = first_zero(lin)
    if rz is None:
        decision = StableUpTo(base.r_max)
    else:
        fine = _certificate_run(base, rz)
        r_fine = first_zero(fine)
        if r_fine is None:  # zero sits at the rerun's end point
            r_fine = rz
        decision = UnstableAt(rz, instability_certificate(fine, r_fine))
    weighted = agreement = None
    if cross_check:
        R = base.r_max
        lam = weighted_ball_eigenvalue(profile, N, alpha, R, tol, base=base)
        weighted = (R, lam)
        agreement = (lam < 1.0) == (rz is not None)
    return StabilityVerdict(alpha, decision, weighted, agreement, base, lin)


# -- ball eigenvalues ----------------------------------------------------------


def _shoot(profile, N, weight, weight_log, series, R, tol, max_zeros):
    segments, zeros = integrate_linear(
        profile, N, weight, weight_log, series, DEFAULT_EPS, R, tol, switch=math.inf, max_zeros=max_zeros
    )
    return segments, zeros


def _dirichlet_eigenvalue(
    profile: WarpProfile,
    N: int,
    R: float,
    tol: float,
    weight_shape: Callable[[float], float],
    w0: float,
    w2: float,
    lo: float = 1e-8,
    hi: float = 1e8,
) -> float:
    """Smallest ``mu`` with ``phi'' + (N-1)(psi'/psi)phi' + mu q phi = 0`` vanishing first at ``R``."""

    def shot(mu: float, max_zeros: Optional[int]):
        series = linear_series(profile, N, mu * w0, mu * w2)
        return _shoot(
            profile, N, lambda r: mu * weight_shape(r), None, series, R, tol, max_zeros
        )

    def zeros_before_R(mu: float) -> int:
        return shot(mu, 2)[1]

    def end_value(mu: float) -> float:
        segments, _ = shot(mu, None)
        return segments[-1].traj.y[-1][0]

    hi_z = zeros_before_R(hi)
    if zeros_before_R(lo) != 0 or hi_z == 0:
        raise BracketFailure(f"mu bracket ({lo:g}, {hi:g}) does not straddle the eigenvalue at R={R:g}")
    # geometric bisection until the upper end has exactly one zero in (0, R]
    while not (hi_z == 1 and hi / lo < 1.5):
        mid = math.sqrt(lo * hi)
        if hi / lo < 1.0 + 1e-12:
            return mid
        z = zeros_before_R(mid)
        if z == 0:
            lo = mid
        else:
            hi, hi_z = mid, z
    return brentq(end_value, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=100)


def ball_eigenvalue(profile: WarpProfile, N: int, R: float, tol: float = 1e-12) -> float:
    """First Dirichlet eigenvalue of ``-Delta_g`` on radial functions in ``B_R``."""
    if not R > 0:
        raise ValueError("R must be positive")
    return _dirichlet_eigenvalue(profile, N, R, tol, lambda r: 1.0, 1.0, 0.0)


def weighted_ball_eigenvalue(
    profile: WarpProfile,
    N: int,
    alpha: float,
    R: float,
    tol: float = 1e-10,
    base: Optional[RadialSolution] = None,
    frozen_weight: bool = False,
) -> float:
    """``Lambda(B_R, alpha)``: first Dirichlet eigenvalue with weight ``e^{u_alpha}``.

    ``frozen_weight`` replaces ``e^{u_alpha}`` by its value ``e^alpha`` at the pole.
    """
    ea = math.exp(alpha)
    if frozen_weight:
        return _dirichlet_eigenvalue(profile, N, R, tol, lambda r: ea, ea, 0.0)
    if base is None or base.r_max < R or base.alpha != alpha:
        base = integrate_ivp(profile, N, alpha, R, min(tol, DEFAULT_TOL))
    return _dirichlet_eigenvalue(profile, N, R, tol, base.exp_u_at, ea, ea * base.series.c2)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Extrapolated bottom of the spectrum from ball eigenvalues."""

    value: float
    uncertainty: float
    radii: tuple
    ball_values: tuple

    @property
    def log_value(self) -> float:
        return math.log(self.value)


def bottom_of_spectrum(
    profile: WarpProfile, N: int, radii: Sequence[float] = (10.0, 20.0, 40.0), tol: float = 1e-12
) -> SpectrumEstimate:
    """Richardson extrapolation of ``lambda_1(B_R)`` in ``1/R`` (leading ``R^-2`` term).

    Radii must double successively.  The uncertainty band is the gap between
    the last two extrapolants.
    """
    radii = tuple(float(x) for x in radii)
    vals = tuple(ball_eigenvalue(profile, N, R, tol) for R in radii)
    extrap = [(4 * vals[i + 1] - vals[i]) / 3 for i in range(len(vals) - 1)]
    if len(extrap) > 1:
        unc = abs(extrap[-1] - extrap[-2])
    else:
        unc = abs(extrap[-1] - vals[-1])
    return SpectrumEstimate(extrap[-1], unc, radii, vals)


# -- threshold -----------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdEstimate:
    eta_hat: float
    tol_alpha: float
    alpha_lo: float
    alpha_hi: float
    r_max: float
    log_lambda1_hat: Optional[float]
    stable_witness: StabilityVerdict
    unstable_witness: StabilityVerdict
    probes: tuple  # (alpha, stable) pairs in probe order

    def __float__(self) -> float:
        return self.eta_hat

    def csv_row(self) -> tuple:
        return (self.eta_hat, self.tol_alpha, self.alpha_lo, self.alpha_hi, self.log_lambda1_hat)


ETA_HEADER = ("eta_hat", "tol", "alpha_lo", "alpha_hi", "log_lambda1_hat")


def _strip(v: StabilityVerdict) -> StabilityVerdict:
    return StabilityVerdict(v.alpha, v.decision, v.weighted_eig, v.method_agreement)


def threshold_eta(
    profile: WarpProfile,
    N: int,
    alpha_lo: Optional[float] = None,
    alpha_hi: float = 10.0,
    r_max: Optional[float] = None,
    tol_alpha: float = 1e-3,
    tol: float = DEFAULT_TOL,
    scan: int = 9,
    log_lambda1: Optional[float] = None,
) -> ThresholdEstimate:
    """Bisect on ``alpha`` for the edge of the stable interval.

    A coarse scan of ``scan`` points first checks that verdicts are monotone
    (stable block below an unstable block) and narrows the bracket.
    """
    if not 2 <= N <= 9:
        raise ValueError("a finite threshold exists only for 2 <= N <= 9")
    r_max = default_r_max(profile, N) if r_max is None else r_max
    if alpha_lo is None:
        if log_lambda1 is None:
            log_lambda1 = bottom_of_spectrum(profile, N).log_value
        alpha_lo = log_lambda1 - 2.0
    probes: List[tuple] = []

    def probe(a: float) -> StabilityVerdict:
        v = _strip(stability_test(profile, N, a, r_max, tol))
        probes.append((a, v.stable))
        return v

    lo_v, hi_v = probe(alpha_lo), probe(alpha_hi)
    if not lo_v.stable or hi_v.stable:
        raise BracketError(
            f"bracket [{alpha_lo:g}, {alpha_hi:g}] is not (stable, unstable): "
            f"{lo_v.decision.name}, {hi_v.decision.name}"
        )
    if scan > 2:
        grid = np.linspace(alpha_lo, alpha_hi, scan)[1:-1]
        verdicts = [lo_v] + [probe(a) for a in grid] + [hi_v]
        flags = [v.stable for v in verdicts]
        first_unstable = flags.index(False)
        if any(flags[first_unstable:]):
            raise NonMonotoneWitness(f"stable verdict above an unstable one on the scan grid for {profile.spec}, N={N}")
        lo_v, hi_v = verdicts[first_unstable - 1], verdicts[first_unstable]
    lo, hi = lo_v.alpha, hi_v.alpha
    while hi - lo > tol_alpha:
        mid = 0.5 * (lo + hi)
        v = probe(mid)
        if v.stable:
            lo, lo_v = mid, v
        else:
            hi, hi_v = mid, v
    return ThresholdEstimate(
        0.5 * (lo + hi), tol_alpha, alpha_lo, alpha_hi, r_max, log_lambda1, lo_v, hi_v, tuple(probes)
    )


def verdicts_monotone(verdicts: Sequence[StabilityVerdict]) -> bool:
    """True if, sorted by alpha, no stable verdict follows an unstable one."""
    flags = [v.stable for v in sorted(verdicts, key=lambda v: v.alpha)]
    if False not in flags:
        return True
    return not any(flags[flags.index(False):])
