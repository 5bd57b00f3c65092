"""Grenander-type slope estimator, PAVA, and kernel-smoothed monotone estimators.

The smoothed Grenander estimator is evaluated through its closed form as a
weighted sum of kernel survival functions, one per jump of the Grenander
estimator, so it is non-increasing by construction.  Sums are accumulated
with :func:`math.fsum`, which rounds the exact sum once; rounding in a long
running sum therefore cannot break monotonicity between nearby grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError
from .hull import CadlagStep, PolylineEnvelope, upper_concave_majorant

__all__ = [
    "MonotoneStepFn",
    "KernelSpec",
    "BIWEIGHT",
    "EPANECHNIKOV",
    "BandwidthRule",
    "grenander_decompose",
    "grenander",
    "pava_decreasing",
    "smoothed_grenander_eval",
    "kernel_estimator_eval",
    "boundary_extend",
    "smoothed_grenander",
    "kernel_estimator",
    "bandwidth_holder",
    "discrepancy_stat",
]


@dataclass(frozen=True)
class MonotoneStepFn:
    """Non-increasing step function stored as jumps.

    ``f(t) = tail + sum(p[j] for tau[j] >= t)`` on ``(a, b]``, extended to
    ``a`` by its right limit.  ``levels`` optionally carries the exact piece
    values (length ``m + 1``) so that evaluation does not re-add jump sizes.
    """

    a: float
    b: float
    tau: np.ndarray
    p: np.ndarray
    tail: float
    levels: Optional[np.ndarray] = None

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float).reshape(-1)
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if tau.shape != p.shape:
            raise InputError("breakpoints and jump sizes must have equal length")
        if np.any(p < 0):
            raise InputError("jump sizes must be nonnegative")
        if tau.size and (np.any(np.diff(tau) <= 0) or tau[0] <= self.a or tau[-1] > self.b):
            raise InputError("breakpoints must be strictly increasing in (a, b]")
        levels = self.levels
        if levels is None:
            levels = float(self.tail) + np.concatenate((np.cumsum(p[::-1])[::-1], [0.0]))
        levels = np.asarray(levels, dtype=float)
        if levels.shape != (tau.size + 1,):
            raise InputError("levels must have one more entry than breakpoints")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "tail", float(self.tail))
        object.__setattr__(self, "levels", levels)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.a) or np.any(t > self.b):
            raise DomainError(f"evaluation outside [{self.a}, {self.b}]")
        out = self.levels[np.searchsorted(self.tau, t, side="left")]
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel supported on ``[-1, 1]`` with derivative and survival function."""

    name: str
    density: Callable
    derivative: Callable
    survival: Callable


def _on_support(u):
    return np.abs(u) <= 1.0


def _biweight(u):
    u = np.asarray(u, dtype=float)
    v = 1.0 - u * u
    return np.where(_on_support(u), 0.9375 * v * v, 0.0)


def _biweight_d(u):
    u = np.asarray(u, dtype=float)
    return np.where(_on_support(u), -3.75 * u * (1.0 - u * u), 0.0)


def _biweight_s(u):
    u = np.asarray(u, dtype=float)
    w = np.minimum(np.abs(u), 1.0)
    right = (1.0 - w) ** 3 * (8.0 + 9.0 * w + 3.0 * w * w) / 16.0
    return np.where(u >= 0, right, 1.0 - right)


def _epan(u):
    u = np.asarray(u, dtype=float)
    return np.where(_on_support(u), 0.75 * (1.0 - u * u), 0.0)


def _epan_d(u):
    u = np.asarray(u, dtype=float)
    return np.where(_on_support(u), -1.5 * u, 0.0)


def _epan_s(u):
    u = np.asarray(u, dtype=float)
    w = np.minimum(np.abs(u), 1.0)
    right = (1.0 - w) ** 2 * (2.0 + w) / 4.0
    return np.where(u >= 0, right, 1.0 - right)


BIWEIGHT = KernelSpec("biweight", _biweight, _biweight_d, _biweight_s)
# K' jumps at the support ends, so only suitable for order-0 work.
EPANECHNIKOV = KernelSpec("epanechnikov", _epan, _epan_d, _epan_s)

KERNELS = {k.name: k for k in (BIWEIGHT, EPANECHNIKOV)}


@dataclass(frozen=True)
class BandwidthRule:
    """``h = scale * n ** (-1 / (2 * alpha + 1))`` for a Holder exponent ``alpha``."""

    alpha: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise InputError("Holder exponent must lie in (1, 2]")
        if not self.scale > 0:
            raise InputError("bandwidth scale must be positive")


def bandwidth_holder(rule: BandwidthRule, n: int) -> float:
    if n < 2:
        raise InputError("sample size must be at least 2")
    return rule.scale * float(n) ** (-1.0 / (2.0 * rule.alpha + 1.0))


def grenander_decompose(env: PolylineEnvelope) -> MonotoneStepFn:
    """Left-hand slope of a concave majorant, as jump locations and sizes."""
    if env.orientation != "concave":
        raise InputError("Grenander slopes need a concave envelope")
    if env.x.size < 2:
        raise InputError("envelope has no segments")
    s = env.slopes
    return MonotoneStepFn(
        env.lower, env.upper, env.x[1:-1], s[:-1] - s[1:], float(s[-1]), levels=s
    )


def grenander(step: CadlagStep) -> MonotoneStepFn:
    """Grenander-type estimator built from a cumulative step estimator."""
    return grenander_decompose(upper_concave_majorant(*step.graph_points()))


def pava_decreasing(values, weights=None) -> np.ndarray:
    """Weighted least-squares projection onto non-increasing sequences.

    Pool-adjacent-violators with a block stack; neighbouring blocks with
    equal means are pooled as well, giving the canonical block partition.
    """
    y = np.asarray(values, dtype=float).reshape(-1)
    if y.size == 0:
        raise InputError("empty input")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != y.shape:
        raise InputError("values and weights must have equal length")
    if np.any(~(w > 0)) or not np.all(np.isfinite(y)):
        raise InputError("weights must be positive and values finite")

    sums: list[float] = []
    wts: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y.tolist(), w.tolist()):
        sums.append(yi * wi)
        wts.append(wi)
        sizes.append(1)
        while len(sums) > 1 and sums[-2] / wts[-2] <= sums[-1] / wts[-1]:
            s, ww, k = sums.pop(), wts.pop(), sizes.pop()
            sums[-1] += s
            wts[-1] += ww
            sizes[-1] += k
    means = np.array(sums) / np.array(wts)
    return np.repeat(means, sizes)


def _check_interior(a, b, h, t):
    if not h > 0:
        raise InputError("bandwidth must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < a + h) or np.any(t > b - h):
        raise DomainError(f"t must lie in [{a + h}, {b - h}]; use boundary_extend outside")
    return t


def _row_fsum(terms):
    return np.array([math.fsum(row) for row in terms])


def smoothed_grenander_eval(mono: MonotoneStepFn, kernel: KernelSpec, h: float, t, order: int = 0):
    """Smoothed Grenander estimator (or its derivative) on ``[a + h, b - h]``.

    ``order=0``: ``sum_j p_j S_K((t - tau_j) / h) + tail``.
    ``order=1``: ``-(1/h) sum_j p_j K((t - tau_j) / h)``.
    """
    t = _check_interior(mono.a, mono.b, h, t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    u = (t[:, None] - mono.tau[None, :]) / h
    if order == 0:
        terms = mono.p[None, :] * kernel.survival(u)
        terms = np.concatenate((terms, np.full((t.size, 1), mono.tail)), axis=1)
        out = _row_fsum(terms)
    elif order == 1:
        out = -_row_fsum(mono.p[None, :] * kernel.density(u)) / h
    else:
        raise InputError("order must be 0 or 1")
    return float(out[0]) if scalar else out


def kernel_estimator_eval(step: CadlagStep, kernel: KernelSpec, h: float, t, order: int = 0):
    """``h**-(1+l) * sum_i w_i K^(l)((t - x_i) / h)`` over the jumps of ``step``.

    For an empirical distribution function this is the ordinary kernel
    density estimator (order 0) or its derivative (order 1).
    """
    t = _check_interior(step.lower, step.upper, h, t)
    if order not in (0, 1):
        raise InputError("order must be 0 or 1")
    kfun = kernel.density if order == 0 else kernel.derivative
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    x, w = step.jump_x, step.jump_sizes
    out = np.empty(t.size)
    block = 64
    for start in range(0, t.size, block):
        tb = t[start : start + block]
        lo = np.searchsorted(x, tb.min() - h, side="left")
        hi = np.searchsorted(x, tb.max() + h, side="right")
        # K vanishes off [-1, 1], so a dense block over the joint window is exact
        out[start : start + block] = kfun((tb[:, None] - x[None, lo:hi]) / h) @ w[lo:hi]
    out /= h ** (1 + order)
    return float(out[0]) if scalar else out


def boundary_extend(value: float, deriv: float, edge: float, h: float, t, side: str = "lower"):
    """Local linear continuation into a boundary strip.

    ``side="lower"``: ``value + deriv * (t - edge - h)`` on ``[edge, edge + h]``,
    where ``value``/``deriv`` were computed at ``edge + h``.
    ``side="upper"``: ``value + deriv * (t - edge + h)`` on ``[edge - h, edge]``.
    """
    t = np.asarray(t, dtype=float)
    if side == "lower":
        seam = edge + h
        if np.any(t < edge) or np.any(t > seam):
            raise DomainError(f"t must lie in [{edge}, {seam}]")
    elif side == "upper":
        seam = edge - h
        if np.any(t < seam) or np.any(t > edge):
            raise DomainError(f"t must lie in [{seam}, {edge}]")
    else:
        raise InputError("side must be 'lower' or 'upper'")
    out = value + deriv * (t - seam)
    return out if out.ndim else float(out)


def _boundary_corrected(interior, a, b, h, t, order):
    """Evaluate ``interior`` on [a+h, b-h] and extend linearly into both strips."""
    t = np.asarray(t, dtype=float)
    if np.any(t < a) or np.any(t > b):
        raise DomainError(f"evaluation outside [{a}, {b}]")
    if not 0 < h <= (b - a) / 2:
        raise InputError("bandwidth must lie in (0, (b - a) / 2]")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    lo_seam, hi_seam = a + h, b - h
    out = np.empty(t.size)
    left, right = t < lo_seam, t > hi_seam
    mid = ~(left | right)
    if mid.any():
        out[mid] = interior(t[mid], order)
    for mask, edge, seam, side in ((left, a, lo_seam, "lower"), (right, b, hi_seam, "upper")):
        if mask.any():
            d = interior(np.array([seam]), 1)[0]
            if order == 0:
                v = interior(np.array([seam]), 0)[0]
                out[mask] = boundary_extend(v, d, edge, h, t[mask], side)
            else:
                out[mask] = d
    return float(out[0]) if scalar else out


def smoothed_grenander(mono: MonotoneStepFn, kernel: KernelSpec, h: float, t, order: int = 0):
    """Boundary-corrected smoothed Grenander estimator on all of ``[a, b]``."""
    return _boundary_corrected(
        lambda s, l: smoothed_grenander_eval(mono, kernel, h, s, l), mono.a, mono.b, h, t, order
    )


def kernel_estimator(step: CadlagStep, kernel: KernelSpec, h: float, t, order: int = 0):
    """Boundary-corrected ordinary kernel estimator on all of ``[a, b]``."""
    return _boundary_corrected(
        lambda s, l: kernel_estimator_eval(step, kernel, h, s, l),
        step.lower, step.upper, h, t, order,
    )


def discrepancy_stat(mono, step, kernel, h, order, grid) -> float:
    """``max |smoothed Grenander - kernel estimator|`` (order ``l``) over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    diff = smoothed_grenander(mono, kernel, h, grid, order) - kernel_estimator(
        step, kernel, h, grid, order
    )
    return float(np.max(np.abs(diff)))
