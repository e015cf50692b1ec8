"""Dormand-Prince 5(4) stepping for small systems held in Python lists.

States here have two components, so plain float arithmetic beats numpy
array overhead by a wide margin.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import NumericalError, StepUnderflow

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
# fifth minus fourth order weights
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

Vec = List[float]
Rhs = Callable[[float, Vec], Vec]


class Trajectory:
    """Accepted nodes ``x_k`` with states and derivatives, cubic Hermite in between."""

    __slots__ = ("x", "y", "f", "_last")

    def __init__(self, x: Vec, y: List[Vec], f: List[Vec]):
        self.x = x
        self.y = y
        self.f = f
        self._last = 0

    def __len__(self) -> int:
        return len(self.x)

    @property
    def x0(self) -> float:
        return self.x[0]

    @property
    def x1(self) -> float:
        return self.x[-1]

    def _index(self, t: float) -> int:
        x = self.x
        i = self._last
        if not (x[i] <= t <= x[i + 1] if i + 1 < len(x) else False):
            i = bisect_right(x, t) - 1
            i = min(max(i, 0), len(x) - 2)
            self._last = i
        return i

    def component(self, t: float, j: int) -> float:
        """Scalar Hermite evaluation of component ``j``; used inside right-hand sides."""
        i = self._index(t)
        x0 = self.x[i]
        h = self.x[i + 1] - x0
        th = (t - x0) / h
        th2 = th * th
        th3 = th2 * th
        return (
            (2 * th3 - 3 * th2 + 1) * self.y[i][j]
            + (th3 - 2 * th2 + th) * h * self.f[i][j]
            + (-2 * th3 + 3 * th2) * self.y[i + 1][j]
            + (th3 - th2) * h * self.f[i + 1][j]
        )

    def arrays(self):
        return (
            np.asarray(self.x, dtype=float),
            np.asarray(self.y, dtype=float),
            np.asarray(self.f, dtype=float),
        )

    def evaluate(self, t, deriv: bool = False) -> np.ndarray:
        """Vectorized Hermite evaluation; returns shape ``(len(t), dim)``."""
        x, y, f = self.arrays()
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        x0 = x[i]
        h = (x[i + 1] - x0)[:, None]
        th = ((t - x0)[:, None]) / h
        th2, th3 = th * th, th * th * th
        y0, y1, f0, f1 = y[i], y[i + 1], f[i], f[i + 1]
        if not deriv:
            return (
                (2 * th3 - 3 * th2 + 1) * y0
                + (th3 - 2 * th2 + th) * h * f0
                + (-2 * th3 + 3 * th2) * y1
                + (th3 - th2) * h * f1
            )
        return (
            (6 * th2 - 6 * th) * y0 / h
            + (3 * th2 - 4 * th + 1) * f0
            + (-6 * th2 + 6 * th) * y1 / h
            + (3 * th2 - 2 * th) * f1
        )


def _norm(v: Sequence[float]) -> float:
    return max(abs(c) for c in v)


def initial_step(fun: Rhs, t0: float, y0: Vec, f0: Vec, direction_end: float, rtol: float, atol: float) -> float:
    scale = atol + rtol * _norm(y0)
    d0 = _norm(y0) / scale
    d1 = _norm(f0) / scale
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, abs(direction_end - t0))
    y1 = [a + h0 * b for a, b in zip(y0, f0)]
    f1 = fun(t0 + h0, y1)
    d2 = _norm([a - b for a, b in zip(f1, f0)]) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, abs(direction_end - t0))


def integrate(
    fun: Rhs,
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float,
    atol: float = 1e-300,
    h0: Optional[float] = None,
    hmax: float = math.inf,
    accept: Optional[Callable[[float, Vec, float, Vec], bool]] = None,
    stop: Optional[Callable[[float, Vec, float, Vec], bool]] = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` (``t_end > t0``).

    The local error is measured against ``atol + rtol * max(|y|_inf, |y_new|_inf)``
    so that solutions decaying to the origin keep relative accuracy.
    ``accept`` may veto a step that passed the error test (the step is then
    halved). ``stop`` ends the integration after the accepted step where it
    returns True.
    """
    y = [float(c) for c in y0]
    t = float(t0)
    f = fun(t, y)
    xs, ys, fs = [t], [y], [f]
    h = h0 if h0 is not None else initial_step(fun, t, y, f, t_end, rtol, atol)
    h = min(h, hmax)
    n_steps = 0
    vetoes = 0
    reject_prev = False
    while t < t_end:
        if n_steps >= max_steps:
            raise NumericalError(f"step budget of {max_steps} exhausted at t={t:g}")
        if h < 1e-14 * max(abs(t), 1e-300):
            raise StepUnderflow(f"step size {h:.3e} underflowed at t={t:.6g}")
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        k1 = f
        y2 = [a + h * A21 * b1 for a, b1 in zip(y, k1)]
        k2 = fun(t + C2 * h, y2)
        y3 = [a + h * (A31 * b1 + A32 * b2) for a, b1, b2 in zip(y, k1, k2)]
        k3 = fun(t + C3 * h, y3)
        y4 = [a + h * (A41 * b1 + A42 * b2 + A43 * b3) for a, b1, b2, b3 in zip(y, k1, k2, k3)]
        k4 = fun(t + C4 * h, y4)
        y5 = [
            a + h * (A51 * b1 + A52 * b2 + A53 * b3 + A54 * b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        ]
        k5 = fun(t + C5 * h, y5)
        y6 = [
            a + h * (A61 * b1 + A62 * b2 + A63 * b3 + A64 * b4 + A65 * b5)
            for a, b1, b2, b3, b4, b5 in zip(y, k1, k2, k3, k4, k5)
        ]
        k6 = fun(t + h, y6)
        yn = [
            a + h * (B1 * b1 + B3 * b3 + B4 * b4 + B5 * b5 + B6 * b6)
            for a, b1, b3, b4, b5, b6 in zip(y, k1, k3, k4, k5, k6)
        ]
        t_new = t_end if last else t + h
        k7 = fun(t_new, yn)
        err_vec = [
            h * (E1 * b1 + E3 * b3 + E4 * b4 + E5 * b5 + E6 * b6 + E7 * b7)
            for b1, b3, b4, b5, b6, b7 in zip(k1, k3, k4, k5, k6, k7)
        ]
        scale = atol + rtol * max(_norm(y), _norm(yn))
        err = _norm(err_vec) / scale
        if not math.isfinite(err):
            h *= 0.25
            reject_prev = True
            continue
        if err <= 1.0:
            if accept is not None and not accept(t, y, t_new, yn):
                vetoes += 1
                if vetoes > 60:
                    raise NumericalError(f"step repeatedly vetoed at t={t:g}")
                h *= 0.5
                reject_prev = True
                continue
            vetoes = 0
            n_steps += 1
            t, y, f = t_new, yn, k7
            xs.append(t)
            ys.append(y)
            fs.append(f)
            if stop is not None and stop(xs[-2], ys[-2], t, y):
                break
            fac = 5.0 if err == 0 else min(5.0, 0.9 * err**-0.2)
            if reject_prev:
                fac = min(fac, 1.0)
            h = min(h * fac, hmax)
            reject_prev = False
        else:
            h *= max(0.2, 0.9 * err**-0.2)
            reject_prev = True
    return Trajectory(xs, ys, fs)
