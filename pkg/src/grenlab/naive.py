"""Naive cumulative estimators and the Gaussian surrogate process.

Builds the step estimator of the integrated curve for the regression,
density and right-censoring models, the integrated process used in the
faster-rate regime, and a Gaussian process of the form
``F + n**-0.5 * B(L(t))`` sampled on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import InputError, ModelError
from .hull import CadlagStep

__all__ = [
    "TrueCurve",
    "RegressionData",
    "SurvivalData",
    "GaussDriver",
    "regression_cusum",
    "empirical_cdf",
    "nelson_aalen",
    "primitive_process",
    "simulate_driver",
    "gaussian_surrogate",
]


@dataclass(frozen=True)
class TrueCurve:
    """A curve ``f`` on ``[a, b]`` with its primitive ``F`` (``F(a) = 0``).

    ``F_int`` is the second primitive ``t -> int_a^t F``; it is only needed
    for the integrated-process experiments and is computed by quadrature
    when omitted.
    """

    f: Callable
    F: Callable
    a: float = 0.0
    b: float = 1.0
    fprime: Optional[Callable] = None
    F_int: Optional[Callable] = None
    name: str = "curve"

    def H(self, t):
        """``int_a^t (F(b) - F(x)) dx``, the target of the integrated process."""
        t = np.asarray(t, dtype=float)
        Fb = float(self.F(self.b))
        if self.F_int is not None:
            out = (t - self.a) * Fb - self.F_int(t)
        else:
            quad = np.vectorize(lambda s: integrate.quad(self.F, self.a, s)[0])
            out = (t - self.a) * Fb - quad(t)
        return out if np.ndim(out) else float(out)

    def check_decreasing(self, grid_size=1001):
        """Numerical check of a strictly decreasing ``f`` with ``f'`` bounded away from 0."""
        t = np.linspace(self.a, self.b, grid_size)
        if self.fprime is not None:
            d = np.asarray(self.fprime(t), dtype=float)
            if not (np.all(np.isfinite(d)) and np.max(d) < 0):
                raise ModelError(f"{self.name}: f' must be negative and bounded away from 0")
        elif not np.all(np.diff(np.asarray(self.f(t), dtype=float)) < 0):
            raise ModelError(f"{self.name}: f must be strictly decreasing")

    def check_positive(self, grid_size=1001):
        t = np.linspace(self.a, self.b, grid_size)
        v = np.asarray(self.f(t), dtype=float)
        if not (np.all(np.isfinite(v)) and np.min(v) > 0):
            raise ModelError(f"{self.name}: f must be bounded away from 0")


@dataclass(frozen=True)
class RegressionData:
    a: float
    b: float
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise InputError("design points and responses must have equal length")
        if t.size and (np.any(np.diff(t) < 0) or t[0] < self.a or t[-1] > self.b):
            raise InputError("design points must be non-decreasing within [a, b]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SurvivalData:
    times: np.ndarray
    events: np.ndarray
    horizon: float

    def __post_init__(self):
        x = np.asarray(self.times, dtype=float)
        d = np.asarray(self.events)
        if x.ndim != 1 or x.shape != d.shape:
            raise InputError("times and indicators must have equal length")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise InputError("times must be finite and nonnegative")
        if not np.all((d == 0) | (d == 1)):
            raise InputError("indicators must be 0 or 1")
        object.__setattr__(self, "times", x)
        object.__setattr__(self, "events", d.astype(bool))


@dataclass(frozen=True)
class GaussDriver:
    """Gaussian path sampled on a grid of time-changed abscissae ``L(t_k)``."""

    kind: str
    time: np.ndarray
    path: np.ndarray

    def __post_init__(self):
        if self.kind not in ("motion", "bridge"):
            raise InputError(f"unknown driver kind {self.kind!r}")
        time = np.asarray(self.time, dtype=float)
        path = np.asarray(self.path, dtype=float)
        if time.shape != path.shape or time.ndim != 1 or time.size < 2:
            raise InputError("time and path must be equal-length 1-d arrays")
        if np.any(np.diff(time) < 0):
            raise InputError("time grid must be non-decreasing")
        if path[0] != 0:
            raise InputError("path must start at 0")
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "path", path)


def regression_cusum(data: RegressionData) -> CadlagStep:
    """``t -> (1/n) sum_i Y_i 1{t_i <= t}``; coincident design points are merged."""
    n = data.t.size
    if n == 0:
        raise InputError("no observations")
    order = np.argsort(data.t, kind="stable")
    t, y = data.t[order], data.y[order]
    ux, start = np.unique(t, return_index=True)
    cum = np.cumsum(y)[np.append(start[1:], n) - 1] / n
    base = 0.0
    if ux[0] == data.a:
        base = float(cum[0])
        ux, cum = ux[1:], cum[1:]
    return CadlagStep(data.a, data.b, base, ux, cum)


def empirical_cdf(samples, a: float, b: float) -> CadlagStep:
    """Empirical distribution function of ``samples`` on ``[a, b]``."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n == 0:
        raise InputError("no samples")
    if x[0] < a or x[-1] > b or np.any(np.isnan(x)):
        raise InputError(f"samples must lie in [{a}, {b}]")
    ux, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts) / n
    base = 0.0
    if ux[0] == a:
        base = float(cum[0])
        ux, cum = ux[1:], cum[1:]
    return CadlagStep(a, b, base, ux, cum)


def nelson_aalen(data: SurvivalData) -> CadlagStep:
    """Cumulative hazard step estimator on ``[0, horizon]``.

    At the k-th ordered distinct uncensored time ``t_k`` the value is
    ``sum_{j <= k} 1 / n_j`` with ``n_j`` the number at risk ``#{X_i >= t_j}``.
    """
    b = float(data.horizon)
    x = data.times
    fail = np.unique(x[data.events & (x <= b)])
    if fail.size == 0:
        raise ModelError("no uncensored observation in [0, horizon]")
    xs = np.sort(x)
    at_risk = x.size - np.searchsorted(xs, fail, side="left")
    cum = np.cumsum(1.0 / at_risk)
    base = 0.0
    if fail[0] == 0.0:
        base = float(cum[0])
        fail, cum = fail[1:], cum[1:]
    return CadlagStep(0.0, b, base, fail, cum)


def primitive_process(step: CadlagStep):
    """Vertices of ``H(t) = int_a^t (F_n(b) - F_n(x)) dx``.

    The integrand is constant between jumps, so ``H`` is the polyline through
    the returned points, which sit at ``a``, at every jump and at ``b``.
    """
    levels = step.levels
    x = np.concatenate(([step.lower], step.jump_x))
    if x[-1] < step.upper:
        x = np.append(x, step.upper)
        s = levels[-1] - levels
    else:
        s = levels[-1] - levels[:-1]
    y = np.concatenate(([0.0], np.cumsum(s * np.diff(x))))
    return x, y


def simulate_driver(kind: str, time, rng: np.random.Generator) -> GaussDriver:
    """Brownian motion or bridge on the grid ``time``, started at 0.

    Motion: cumulative Gaussian increments with variances equal to the grid
    spacings.  Bridge: ``W(s) - (s - s0)/(s1 - s0) * W(s1)`` with ``s0``,
    ``s1`` the first and last grid values.
    """
    time = np.asarray(time, dtype=float)
    steps = np.diff(time)
    if np.any(steps < 0):
        raise InputError("time grid must be non-decreasing")
    w = np.concatenate(([0.0], np.cumsum(rng.standard_normal(steps.size) * np.sqrt(steps))))
    if kind == "bridge":
        span = time[-1] - time[0]
        if span <= 0:
            raise InputError("bridge needs a time grid of positive length")
        w = w - (time - time[0]) / span * w[-1]
        w[-1] = 0.0
    elif kind != "motion":
        raise InputError(f"unknown driver kind {kind!r}")
    return GaussDriver(kind, time, w)


def gaussian_surrogate(curve: TrueCurve, driver: GaussDriver, n: int, grid):
    """Points ``(t, F(t) + B(L(t)) / sqrt(n))`` on ``grid``.

    ``driver`` must have been sampled on ``L(grid)``; the process is exact on
    the grid, with no embedding error.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid < curve.a) or np.any(grid > curve.b):
        raise InputError("grid must lie within the curve's domain")
    if grid.size != driver.path.size:
        raise InputError("driver was sampled on a different grid")
    return grid, np.asarray(curve.F(grid), dtype=float) + driver.path / np.sqrt(n)
