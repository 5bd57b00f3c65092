"""Least concave majorants and greatest convex minorants of point sets and step functions.

The majorant is computed with Andrew's monotone chain restricted to the
upper hull.  Orientation tests are exact: a floating-point determinant is
accepted only when it clears a forward error bound, otherwise the sign is
recomputed with rational arithmetic.  Collinear middle points are dropped,
so the vertex set is canonical and two majorants of the same points
compare equal vertex by vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "CadlagStep",
    "PolylineEnvelope",
    "upper_concave_majorant",
    "lower_convex_minorant",
    "evaluate_envelope",
    "left_slope",
    "gap_candidates",
    "sup_gap",
    "windowed_majorant",
    "windowed_mismatch",
]

_EPS = 2.0**-53
# Shewchuk's ccwerrboundA for orient2d with differences taken from raw coordinates.
_ORIENT_BOUND = (3.0 + 16.0 * _EPS) * _EPS


def _as_points(x, y):
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise InputError("x and y must be one-dimensional arrays of equal length")
    if x.size == 0:
        raise InputError("at least one point is required")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("coordinates must be finite")
    if x.size > 1 and not np.all(np.diff(x) > 0):
        raise InputError("abscissae must be strictly increasing")
    return x, y


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True)
class PolylineEnvelope:
    """Piecewise-linear concave (or convex) function given by its vertices."""

    x: np.ndarray
    y: np.ndarray
    orientation: str = "concave"

    def __post_init__(self):
        x, y = _as_points(self.x, self.y)
        if self.orientation not in ("concave", "convex"):
            raise InputError(f"unknown orientation {self.orientation!r}")
        x, y = x.copy(), y.copy()
        _freeze(x, y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def lower(self) -> float:
        return float(self.x[0])

    @property
    def upper(self) -> float:
        return float(self.x[-1])

    @property
    def slopes(self) -> np.ndarray:
        # vertices a few ulps apart can give slopes beyond the float range
        with np.errstate(over="ignore"):
            return np.diff(self.y) / np.diff(self.x)

    def __call__(self, t):
        return evaluate_envelope(self, t)

    def __eq__(self, other):
        if not isinstance(other, PolylineEnvelope):
            return NotImplemented
        return (
            self.orientation == other.orientation
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


@dataclass(frozen=True)
class CadlagStep:
    """Right-continuous step function on ``[lower, upper]``.

    Takes ``base`` on ``[lower, jump_x[0])`` and ``jump_to[k]`` on
    ``[jump_x[k], jump_x[k+1])``.  Jumps lie in ``(lower, upper]``; a jump of
    size zero is allowed but carries no information.
    """

    lower: float
    upper: float
    base: float
    jump_x: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_to: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        lower, upper, base = float(self.lower), float(self.upper), float(self.base)
        if not (np.isfinite(lower) and np.isfinite(upper) and np.isfinite(base)):
            raise InputError("domain endpoints and base value must be finite")
        if not lower < upper:
            raise InputError("lower must be strictly less than upper")
        jx = np.array(self.jump_x, dtype=float).reshape(-1)
        jt = np.array(self.jump_to, dtype=float).reshape(-1)
        if jx.shape != jt.shape:
            raise InputError("jump_x and jump_to must have equal length")
        if not (np.all(np.isfinite(jx)) and np.all(np.isfinite(jt))):
            raise InputError("jump data must be finite")
        if jx.size:
            if np.any(np.diff(jx) <= 0):
                raise InputError("jump abscissae must be strictly increasing")
            if jx[0] <= lower or jx[-1] > upper:
                raise InputError("jump abscissae must lie in (lower, upper]")
        _freeze(jx, jt)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "jump_x", jx)
        object.__setattr__(self, "jump_to", jt)

    @property
    def levels(self) -> np.ndarray:
        """Values taken on the successive pieces, ``base`` first."""
        return np.concatenate(([self.base], self.jump_to))

    @property
    def jump_sizes(self) -> np.ndarray:
        return np.diff(self.levels)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.lower) or np.any(t > self.upper) or np.any(np.isnan(t)):
            raise DomainError(f"evaluation outside [{self.lower}, {self.upper}]")
        return t

    def __call__(self, t):
        t = self._check(t)
        out = self.levels[np.searchsorted(self.jump_x, t, side="right")]
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """Value of ``lim_{s -> t-}``; equals the base value at ``lower``."""
        t = self._check(t)
        out = self.levels[np.searchsorted(self.jump_x, t, side="left")]
        return out if out.ndim else float(out)

    def graph_points(self):
        """Points whose least concave majorant is the majorant of the step.

        At a jump the larger of the value and the left limit is used, since a
        continuous majorant must dominate both.
        """
        levels = self.levels
        jy = np.maximum(levels[:-1], levels[1:])
        x = np.concatenate(([self.lower], self.jump_x))
        y = np.concatenate(([self.base], jy))
        if not self.jump_x.size or self.jump_x[-1] < self.upper:
            x = np.append(x, self.upper)
            y = np.append(y, levels[-1])
        return x, y

    def restrict(self, lo: float, hi: float) -> "CadlagStep":
        """Restriction to ``[lo, hi]`` (requires ``lo < hi``)."""
        if not (self.lower <= lo < hi <= self.upper):
            raise InputError(f"cannot restrict to [{lo}, {hi}]")
        keep = (self.jump_x > lo) & (self.jump_x <= hi)
        return CadlagStep(lo, hi, self(lo), self.jump_x[keep], self.jump_to[keep])


# ---------------------------------------------------------------------------
# orientation predicates


def _orient_exact(x0, y0, x1, y1, x2, y2) -> int:
    X0, Y0 = Fraction(x0), Fraction(y0)
    det = (Fraction(x1) - X0) * (Fraction(y2) - Y0) - (Fraction(y1) - Y0) * (
        Fraction(x2) - X0
    )
    return (det > 0) - (det < 0)


def _orient(x0, y0, x1, y1, x2, y2) -> int:
    """Sign of the cross product (p1 - p0) x (p2 - p0).

    Positive when p1 lies strictly below the chord from p0 to p2 (for
    x0 < x1 < x2), i.e. when p1 is not an upper-hull vertex.
    """
    left = (x1 - x0) * (y2 - y0)
    right = (y1 - y0) * (x2 - x0)
    det = left - right
    bound = _ORIENT_BOUND * (abs(left) + abs(right))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _orient_exact(x0, y0, x1, y1, x2, y2)


@numba.njit(cache=True, nogil=True)
def _upper_hull_filtered(x, y, bound_factor):
    n = x.shape[0]
    idx = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n):
        while k >= 2:
            a = idx[k - 2]
            b = idx[k - 1]
            left = (x[b] - x[a]) * (y[i] - y[a])
            right = (y[b] - y[a]) * (x[i] - x[a])
            det = left - right
            bound = bound_factor * (abs(left) + abs(right))
            if det > bound:
                k -= 1
            elif det < -bound:
                break
            else:
                return idx[:0], False
        idx[k] = i
        k += 1
    return idx[:k], True


def _upper_hull_exact(x, y):
    xs, ys = x.tolist(), y.tolist()
    idx: list[int] = []
    for i in range(len(xs)):
        while len(idx) >= 2:
            a, b = idx[-2], idx[-1]
            if _orient(xs[a], ys[a], xs[b], ys[b], xs[i], ys[i]) >= 0:
                idx.pop()
            else:
                break
        idx.append(i)
    return np.asarray(idx, dtype=np.int64)


def _upper_hull_indices(x, y):
    idx, certain = _upper_hull_filtered(x, y, _ORIENT_BOUND)
    if not certain:
        idx = _upper_hull_exact(x, y)
    return idx


def upper_concave_majorant(x, y) -> PolylineEnvelope:
    """Least concave majorant of the points ``(x[i], y[i])``.

    Parameters
    ----------
    x, y : array-like of shape (n,)
        Abscissae (strictly increasing) and ordinates, all finite.

    Returns
    -------
    PolylineEnvelope
        Vertices are a subsequence of the input with strictly decreasing
        segment slopes; the first and last input points are always vertices.
    """
    x, y = _as_points(x, y)
    idx = _upper_hull_indices(x, y)
    return PolylineEnvelope(x[idx], y[idx], "concave")


def lower_convex_minorant(x, y) -> PolylineEnvelope:
    """Greatest convex minorant, obtained by reflecting the ordinates."""
    x, y = _as_points(x, y)
    idx = _upper_hull_indices(x, -y)
    return PolylineEnvelope(x[idx], y[idx], "convex")


def evaluate_envelope(env: PolylineEnvelope, t):
    """Linear interpolation between bracketing vertices; exact at vertices."""
    t = np.asarray(t, dtype=float)
    if np.any(t < env.x[0]) or np.any(t > env.x[-1]) or np.any(np.isnan(t)):
        raise DomainError(f"evaluation outside [{env.x[0]}, {env.x[-1]}]")
    if env.x.size == 1:
        out = np.full(t.shape, env.y[0])
    else:
        out = np.interp(t, env.x, env.y)
    return out if out.ndim else float(out)


def left_slope(env: PolylineEnvelope, t):
    """Slope of the segment to the left of ``t``.

    At an interior vertex the left segment is used; at the left endpoint the
    slope of the first segment (its right limit).
    """
    if env.x.size < 2:
        raise InputError("envelope has no segments")
    t = np.asarray(t, dtype=float)
    if np.any(t < env.x[0]) or np.any(t > env.x[-1]) or np.any(np.isnan(t)):
        raise DomainError(f"evaluation outside [{env.x[0]}, {env.x[-1]}]")
    seg = np.clip(np.searchsorted(env.x, t, side="left") - 1, 0, env.x.size - 2)
    out = env.slopes[seg]
    return out if out.ndim else float(out)


def gap_candidates(source, lo=None, hi=None):
    """Abscissae and values at which ``majorant - source`` can peak on ``[lo, hi]``.

    For a step: ``lo``, ``hi`` and every jump in ``(lo, hi]`` twice, once with
    the left limit and once with the value.  For a polyline ``(x, y)``:
    ``lo``, ``hi`` and the vertices in between.  Between consecutive
    candidates a majorant whose vertices are source points is linear while
    the source is constant or linear, so the supremum is attained at one of
    them.
    """
    lower, upper = _domain(source)
    lo = lower if lo is None else max(lower, lo)
    hi = upper if hi is None else min(upper, hi)
    if lo > hi:
        raise InputError("window does not meet the domain")
    if isinstance(source, CadlagStep):
        levels = source.levels
        jx = source.jump_x
        sel = np.flatnonzero((jx > lo) & (jx <= hi))
        cx = np.concatenate(([lo], np.repeat(jx[sel], 2), [hi]))
        cv = np.empty(cx.size)
        cv[0] = source(lo)
        cv[1:-1:2] = levels[sel]
        cv[2:-1:2] = levels[sel + 1]
        cv[-1] = source(hi)
        return cx, cv
    x, y = _as_points(*source)
    inner = (x > lo) & (x < hi)
    ends = np.interp([lo, hi], x, y) if x.size > 1 else np.array([y[0], y[0]])
    cx = np.concatenate(([lo], x[inner], [hi]))
    cv = np.concatenate(([ends[0]], y[inner], [ends[1]]))
    return cx, cv


def sup_gap(source, env: PolylineEnvelope, window=None):
    """Supremum of ``env - source`` with its location.

    ``source`` is a :class:`CadlagStep` or a polyline ``(x, y)`` whose
    majorant is ``env``; ``window=(lo, hi)`` restricts the supremum to
    ``[lo, hi]``.  The candidate set of :func:`gap_candidates` makes the
    result exact.  Ties resolve to the leftmost location.
    """
    lower, upper = _domain(source)
    if env.x[0] != lower or env.x[-1] != upper:
        raise InputError("envelope and source are defined on different domains")
    lo, hi = (None, None) if window is None else window
    cx, cv = gap_candidates(source, lo, hi)
    diff = evaluate_envelope(env, cx) - cv
    k = int(np.argmax(diff))
    return float(diff[k]), float(cx[k])


def _window(lower, upper, center, halfwidth):
    if not halfwidth > 0:
        raise InputError("halfwidth must be positive")
    lo = max(lower, center - halfwidth)
    hi = min(upper, center + halfwidth)
    if lo > hi:
        raise InputError("window does not meet the domain")
    return lo, hi


def _restricted_points(source, lo, hi):
    if isinstance(source, CadlagStep):
        if lo == hi:
            return np.array([lo]), np.array([source(lo)])
        return source.restrict(lo, hi).graph_points()
    x, y = source
    x, y = _as_points(x, y)
    inner = (x > lo) & (x < hi)
    ends = np.interp([lo, hi], x, y) if x.size > 1 else np.array([y[0], y[0]])
    xs = np.concatenate(([lo], x[inner], [hi]))
    ys = np.concatenate(([ends[0]], y[inner], [ends[1]]))
    if lo == hi:
        return xs[:1], ys[:1]
    return xs, ys


def _domain(source):
    if isinstance(source, CadlagStep):
        return source.lower, source.upper
    x = np.asarray(source[0], dtype=float)
    return float(x[0]), float(x[-1])


def windowed_majorant(source, center: float, halfwidth: float) -> PolylineEnvelope:
    """Majorant of ``source`` restricted to ``[center - halfwidth, center + halfwidth]``.

    ``source`` is either a :class:`CadlagStep` or a pair ``(x, y)`` read as
    the continuous polyline through those points.  The window is clipped to
    the domain of ``source`` and its end values are taken from ``source``
    itself, so the result is the majorant of the exact restriction.
    """
    lower, upper = _domain(source)
    lo, hi = _window(lower, upper, center, halfwidth)
    return upper_concave_majorant(*_restricted_points(source, lo, hi))


def _exact_value(ex, ey, t) -> Fraction:
    ex, ey = ex.tolist(), ey.tolist()
    t = Fraction(t)
    if len(ex) == 1:
        return Fraction(ey[0])
    k = int(np.searchsorted(ex, float(t), side="left"))
    if k < len(ex) and ex[k] == t:
        return Fraction(ey[k])
    x0, x1 = Fraction(ex[k - 1]), Fraction(ex[k])
    y0, y1 = Fraction(ey[k - 1]), Fraction(ey[k])
    return y0 + (y1 - y0) * (t - x0) / (x1 - x0)


def windowed_mismatch(source, grid, halfwidth: float, env: PolylineEnvelope | None = None):
    """Flag grid points where the global and the centred windowed majorant differ.

    For each ``g`` in ``grid`` compares the global majorant at ``g`` with the
    majorant of the restriction of ``source`` to ``[g - halfwidth,
    g + halfwidth]``, also at ``g``.  When both global vertices bracketing
    ``g`` fall inside the window the two agree (the windowed majorant is
    squeezed between the chord and the global majorant) and no windowed
    majorant is built; otherwise it is built and compared in exact
    arithmetic.
    """
    if env is None:
        if isinstance(source, CadlagStep):
            env = upper_concave_majorant(*source.graph_points())
        else:
            env = upper_concave_majorant(*source)
    lower, upper = _domain(source)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < lower) or np.any(grid > upper):
        raise DomainError("grid outside the domain")
    lo = np.maximum(lower, grid - halfwidth)
    hi = np.minimum(upper, grid + halfwidth)
    k = np.searchsorted(env.x, grid, side="left")
    on_vertex = (k < env.x.size) & (env.x[np.minimum(k, env.x.size - 1)] == grid)
    vl = np.where(on_vertex, grid, env.x[np.maximum(k - 1, 0)])
    vr = np.where(on_vertex, grid, env.x[np.minimum(k, env.x.size - 1)])
    if isinstance(source, CadlagStep):
        # a window starting exactly on a jump sees the value, not the left
        # limit; only the domain's own left end has no left limit to miss
        left_ok = (vl > lo) | ((vl == lower) & (lo == lower)) | on_vertex
    else:
        left_ok = vl >= lo
    safe = left_ok & (vr <= hi)
    out = np.zeros(grid.shape, dtype=bool)
    for i in np.flatnonzero(~safe):
        g = float(grid[i])
        w = upper_concave_majorant(*_restricted_points(source, float(lo[i]), float(hi[i])))
        out[i] = _exact_value(w.x, w.y, g) != _exact_value(env.x, env.y, g)
    return out
