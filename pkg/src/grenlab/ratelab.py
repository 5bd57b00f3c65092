"""Seeded Monte Carlo engine for supremum-distance rate experiments.

A replication draws one dataset from a model, builds the naive cumulative
estimator (or the integrated process, or the Gaussian surrogate), takes its
least concave majorant and reduces the pair to a scalar statistic.  Every
replication seeds its own generator from ``(seed, n, rep)``, so tables do
not depend on execution order or on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Optional

import numpy as np
from scipy import stats

from . import monotone
from .errors import FitError, InputError, ModelError
from .hull import (
    CadlagStep,
    evaluate_envelope,
    gap_candidates,
    sup_gap,
    upper_concave_majorant,
    windowed_mismatch,
)
from .naive import (
    RegressionData,
    SurvivalData,
    TrueCurve,
    empirical_cdf,
    gaussian_surrogate,
    nelson_aalen,
    primitive_process,
    regression_cusum,
    simulate_driver,
)

logger = logging.getLogger(__name__)

VARIANTS = ("regression", "density", "censoring", "surrogate", "primitive")
STATISTICS = ("global", "local", "pointwise", "moment", "localization", "smoothing")
REGRESSORS = ("lognlogn", "logn")


# ---------------------------------------------------------------------------
# default curves


def _lin_f(c):
    return lambda t: c - np.asarray(t, dtype=float)


def _lin_F(c):
    return lambda t: c * np.asarray(t, dtype=float) - 0.5 * np.asarray(t, dtype=float) ** 2


def _lin_Fint(c):
    return lambda t: 0.5 * c * np.asarray(t, dtype=float) ** 2 - np.asarray(t, dtype=float) ** 3 / 6


def linear_curve(c: float, b: float = 1.0, name: str = "") -> TrueCurve:
    """``f(x) = c - x`` on ``[0, b]``, with exact first and second primitives."""
    return TrueCurve(
        f=_lin_f(c),
        F=_lin_F(c),
        a=0.0,
        b=b,
        fprime=lambda t: -np.ones_like(np.asarray(t, dtype=float)),
        F_int=_lin_Fint(c),
        name=name or f"{c:g}-x",
    )


# ---------------------------------------------------------------------------
# specifications


@dataclass(frozen=True)
class ModelSpec:
    """Data-generating model.

    ``error_law`` (regression, primitive) and ``censoring_law`` (censoring)
    are frozen :mod:`scipy.stats` distributions.  ``time_change`` is the
    variance function ``L`` of the surrogate driver; it defaults to ``F``.
    """

    variant: str
    curve: TrueCurve
    error_law: Any = None
    censoring_law: Any = None
    driver: str = "bridge"
    time_change: Any = None

    @property
    def regime(self) -> float:
        """Tail exponent of the approximating Gaussian process."""
        return 2.0 if self.variant == "primitive" else 1.0

    @property
    def L(self):
        return self.curve.F if self.time_change is None else self.time_change

    def validate(self):
        c = self.curve
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown variant {self.variant!r}")
        if not c.a < c.b:
            raise ModelError("curve domain must satisfy a < b")
        if abs(float(c.F(c.a))) > 1e-12:
            raise ModelError("primitive must vanish at a")
        if self.variant == "primitive":
            c.check_positive()
        else:
            c.check_decreasing()
        if self.variant in ("density", "censoring"):
            c.check_positive()
        if self.variant == "density" and abs(float(c.F(c.b)) - 1.0) > 1e-9:
            raise ModelError("density must integrate to 1 over [a, b]")
        if self.variant in ("regression", "primitive"):
            law = self.error_law
            if law is None:
                raise ModelError("regression needs an error law")
            if abs(float(law.mean())) > 1e-9 or not float(law.var()) > 0:
                raise ModelError("errors must be centred with positive variance")
            if not np.isfinite(float(law.expect(lambda e: np.abs(e) ** 3))):
                raise ModelError("errors need a finite third absolute moment")
        if self.variant == "censoring":
            if c.a != 0.0:
                raise ModelError("the censoring model lives on [0, b]")
            if self.censoring_law is None or not float(self.censoring_law.cdf(c.b)) < 1.0:
                raise ModelError("censoring law must leave mass beyond b")
        if self.variant == "surrogate":
            if self.driver not in ("motion", "bridge"):
                raise ModelError(f"unknown driver {self.driver!r}")
            t = np.linspace(c.a, c.b, 1001)
            if not np.all(np.diff(np.asarray(self.L(t), dtype=float)) > 0):
                raise ModelError("time change must be increasing")
        return self


def default_model(variant: str, driver: str = "bridge", censoring_mass: float = 0.5) -> ModelSpec:
    """Reference models.

    density: ``f = 1.5 - x`` on [0, 1]; regression and primitive: ``f = 2 - x``
    on [0, 1] with standard Gaussian errors; censoring: hazard ``2 - x`` on
    [0, 0.9] with exponential censoring of mass ``censoring_mass`` on [0, 0.9];
    surrogate: density curve with a Brownian bridge (or motion) driven by
    ``L = F``.
    """
    if variant == "density":
        spec = ModelSpec("density", linear_curve(1.5, name="density 1.5-x"))
    elif variant in ("regression", "primitive"):
        spec = ModelSpec(variant, linear_curve(2.0, name="regression 2-x"), error_law=stats.norm())
    elif variant == "censoring":
        if not 0 < censoring_mass < 1:
            raise ModelError("censoring mass on [0, b] must lie in (0, 1)")
        b = 0.9
        rate = -math.log1p(-censoring_mass) / b
        spec = ModelSpec(
            "censoring", linear_curve(2.0, b=b, name="hazard 2-x"),
            censoring_law=stats.expon(scale=1.0 / rate),
        )
    elif variant == "surrogate":
        spec = ModelSpec("surrogate", linear_curve(1.5, name="density 1.5-x"), driver=driver)
    else:
        raise ModelError(f"unknown variant {variant!r}")
    return spec.validate()


@dataclass(frozen=True)
class ExperimentPlan:
    """Monte Carlo configuration.

    The neighbourhood radius is ``eps_n = epsilon_scale * n**-epsilon_power``
    and the localization half-width ``2 * (c0 * log(n) / n)**(1 / (4 - tau))``.
    """

    model: ModelSpec
    n_grid: tuple = (1024, 2048, 4096)
    reps: int = 100
    seed: int = 0
    statistic: str = "global"
    x0: float = 0.5
    epsilon_scale: float = 1.0
    epsilon_power: float = 1.0 / 3.0
    c0: float = 1.0
    moment_order: float = 1.0
    bandwidth: monotone.BandwidthRule = field(default_factory=monotone.BandwidthRule)
    kernel: str = "biweight"
    derivative_order: int = 0
    grid_size: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))

    def validate(self):
        m = self.model.validate()
        if not self.n_grid or any(n < 3 for n in self.n_grid):
            raise InputError("sample sizes must be at least 3")
        if list(self.n_grid) != sorted(set(self.n_grid)):
            raise InputError("n_grid must be strictly increasing")
        if self.reps < 1:
            raise InputError("reps must be positive")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")
        if self.statistic not in STATISTICS:
            raise InputError(f"unknown statistic {self.statistic!r}")
        if not m.curve.a <= self.x0 <= m.curve.b:
            raise InputError("x0 must lie in [a, b]")
        if not self.c0 > 0:
            raise InputError("c0 must be positive")
        if not self.moment_order >= 1:
            raise InputError("moment order must be at least 1")
        tau = m.regime
        if self.statistic == "local":
            short = [n for n in self.n_grid if self.epsilon(n) < (math.log(n) / n) ** (1.0 / (4.0 - tau))]
            if short:
                logger.warning("eps_n below (log n / n)^(1/(4-tau)) for n in %s", short)
        if self.kernel not in monotone.KERNELS:
            raise InputError(f"unknown kernel {self.kernel!r}")
        if self.derivative_order not in (0, 1):
            raise InputError("derivative order must be 0 or 1")
        if self.statistic == "smoothing" and m.variant not in ("regression", "density", "censoring"):
            raise InputError("smoothing statistic needs a step-estimator model")
        if self.grid_size < 2:
            raise InputError("grid_size must be at least 2")
        return self

    def epsilon(self, n: int) -> float:
        return self.epsilon_scale * float(n) ** (-self.epsilon_power)

    def localization_radius(self, n: int) -> float:
        return (self.c0 * math.log(n) / n) ** (1.0 / (4.0 - self.model.regime))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    regressor: str
    n_min: int
    n_max: int
    reps: int


class ResultRow(NamedTuple):
    model: str
    statistic: str
    n: int
    rep: int
    value: float


class Checks(NamedTuple):
    """Per-replication structural checks on the evaluation grid."""

    marshall_lhs: float  # max |majorant - target|
    marshall_rhs: float  # max |naive - target|
    dominated: bool  # majorant >= naive everywhere on the grid


# ---------------------------------------------------------------------------
# sampling


def replication_seed(seed: int, n: int, rep: int) -> int:
    """64-bit seed for one replication, hashed from ``(seed, n, rep)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(n), int(rep)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _invert_increasing(G, target, lo, hi, tol=1e-12):
    """Vectorised bisection for ``G(x) = target`` on ``[lo, hi]``."""
    target = np.asarray(target, dtype=float)
    left = np.full(target.shape, float(lo))
    right = np.full(target.shape, float(hi))
    iters = max(1, math.ceil(math.log2((hi - lo) / tol)))
    for _ in range(iters):
        mid = 0.5 * (left + right)
        below = np.asarray(G(mid), dtype=float) < target
        left = np.where(below, mid, left)
        right = np.where(below, right, mid)
    return 0.5 * (left + right)


@dataclass(frozen=True)
class Dataset:
    variant: str
    data: Any


def sample_model(spec: ModelSpec, n: int, seed: int) -> Dataset:
    """Draw one dataset of size ``n``; a deterministic function of its arguments."""
    rng = np.random.default_rng(seed)
    c = spec.curve
    if spec.variant in ("regression", "primitive"):
        t = c.a + (c.b - c.a) * np.arange(1, n + 1) / n
        eps = np.asarray(spec.error_law.rvs(size=n, random_state=rng), dtype=float)
        return Dataset(spec.variant, RegressionData(c.a, c.b, t, np.asarray(c.f(t)) + eps))
    if spec.variant == "density":
        u = rng.random(n) * float(c.F(c.b))
        return Dataset("density", np.sort(_invert_increasing(c.F, u, c.a, c.b)))
    if spec.variant == "censoring":
        e = rng.standard_exponential(n)
        Fb, fb = float(c.F(c.b)), float(c.f(c.b))
        inside = e <= Fb
        T = np.empty(n)
        T[inside] = _invert_increasing(c.F, e[inside], c.a, c.b)
        # constant hazard beyond b; only the ordering relative to b matters
        T[~inside] = c.b + (e[~inside] - Fb) / fb
        Y = np.asarray(spec.censoring_law.rvs(size=n, random_state=rng), dtype=float)
        return Dataset("censoring", SurvivalData(np.minimum(T, Y), (T <= Y).astype(int), c.b))
    if spec.variant == "surrogate":
        grid = c.a + (c.b - c.a) * np.arange(n + 1) / n
        return Dataset("surrogate", simulate_driver(spec.driver, spec.L(grid), rng))
    raise ModelError(f"unknown variant {spec.variant!r}")


# ---------------------------------------------------------------------------
# replications


@dataclass
class Replication:
    """Naive estimator, its majorant, and the deterministic target."""

    source: Any  # CadlagStep or polyline (x, y)
    env: Any
    target: Any  # callable: F, or H for the integrated process
    a: float
    b: float


def build_replication(spec: ModelSpec, n: int, seed: int) -> Replication:
    ds = sample_model(spec, n, seed)
    c = spec.curve
    if spec.variant == "regression":
        source = regression_cusum(ds.data)
    elif spec.variant == "density":
        source = empirical_cdf(ds.data, c.a, c.b)
    elif spec.variant == "censoring":
        source = nelson_aalen(ds.data)
    elif spec.variant == "primitive":
        source = primitive_process(regression_cusum(ds.data))
    else:
        source = gaussian_surrogate(c, ds.data, n, c.a + (c.b - c.a) * np.arange(n + 1) / n)
    if isinstance(source, CadlagStep):
        env = upper_concave_majorant(*source.graph_points())
    else:
        env = upper_concave_majorant(*source)
    target = c.H if spec.variant == "primitive" else c.F
    return Replication(source, env, target, c.a, c.b)


def _source_at(source, t):
    if isinstance(source, CadlagStep):
        return source(t)
    return np.interp(t, source[0], source[1])


def replication_checks(rep: Replication, grid_size: int = 1024) -> Checks:
    """Marshall and domination checks on the evaluation grid.

    The grid holds the candidate abscissae of the supremum (jumps with their
    left limits, or polyline vertices) and ``grid_size`` equispaced points.
    """
    cx, cv = gap_candidates(rep.source)
    eq = np.linspace(rep.a, rep.b, grid_size)
    xs = np.concatenate((cx, eq))
    naive = np.concatenate((cv, _source_at(rep.source, eq)))
    major = evaluate_envelope(rep.env, xs)
    truth = np.asarray(rep.target(xs), dtype=float)
    return Checks(
        float(np.max(np.abs(major - truth))),
        float(np.max(np.abs(naive - truth))),
        bool(np.all(major >= naive)),
    )


def _statistic(plan: ExperimentPlan, rep: Replication, n: int, name: str) -> float:
    if name in ("global", "moment"):
        g = sup_gap(rep.source, rep.env)[0]
        return g if name == "global" else g**plan.moment_order
    if name == "local":
        eps = plan.epsilon(n)
        return sup_gap(rep.source, rep.env, (plan.x0 - eps, plan.x0 + eps))[0]
    if name == "pointwise":
        return float(evaluate_envelope(rep.env, plan.x0) - _source_at(rep.source, plan.x0))
    if name == "localization":
        grid = np.linspace(rep.a, rep.b, plan.grid_size)
        half = 2.0 * plan.localization_radius(n)
        return float(np.any(windowed_mismatch(rep.source, grid, half, rep.env)))
    if name == "smoothing":
        kernel = monotone.KERNELS[plan.kernel]
        h = monotone.bandwidth_holder(plan.bandwidth, n)
        mono = monotone.grenander(rep.source)
        grid = np.linspace(rep.a, rep.b, plan.grid_size)
        return monotone.discrepancy_stat(
            mono, rep.source, kernel, h, plan.derivative_order, grid
        )
    raise InputError(f"unknown statistic {name!r}")


def replication_statistics(plan: ExperimentPlan, n: int, rep_index: int, statistics=None, checks=False):
    """Several statistics computed on the same replication.

    Returns a dict keyed by statistic name; with ``checks=True`` the
    :class:`Checks` tuple is added under ``"checks"``.
    """
    names = (plan.statistic,) if statistics is None else tuple(statistics)
    rep = build_replication(plan.model, n, replication_seed(plan.seed, n, rep_index))
    out = {name: _statistic(plan, rep, n, name) for name in names}
    if checks:
        out["checks"] = replication_checks(rep, plan.grid_size)
    return out


def replication_statistic(plan: ExperimentPlan, n: int, rep_index: int) -> float:
    return replication_statistics(plan, n, rep_index)[plan.statistic]


def run_experiment(plan: ExperimentPlan, statistics=None, workers: int = 1, checks: bool = False):
    """Run every ``(n, rep)`` replication of ``plan``.

    Returns ``(rows, checks)``: one :class:`ResultRow` per replication and
    statistic, ordered by statistic, ``n`` and ``rep``; and, when requested,
    a dict ``{(n, rep): Checks}``.
    """
    plan.validate()
    names = (plan.statistic,) if statistics is None else tuple(statistics)
    for name in names:
        if name not in STATISTICS:
            raise InputError(f"unknown statistic {name!r}")
    keys = [(n, r) for n in plan.n_grid for r in range(plan.reps)]

    def task(key):
        return replication_statistics(plan, key[0], key[1], names, checks)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, keys))
    else:
        results = [task(k) for k in keys]
    by_key = dict(zip(keys, results))
    model = plan.model.variant
    rows = [
        ResultRow(model, name, n, r, float(by_key[(n, r)][name]))
        for name in names
        for (n, r) in keys
    ]
    check_map = {k: v["checks"] for k, v in by_key.items()} if checks else {}
    return rows, check_map


# ---------------------------------------------------------------------------
# rate fitting


def _regressor(n, kind):
    n = np.asarray(n, dtype=float)
    if kind == "lognlogn":
        return np.log(np.log(n) / n)
    if kind == "logn":
        return np.log(n)
    raise FitError(f"unknown regressor {kind!r}")


def summarize(rows, aggregate: Optional[str] = None):
    """Per-``n`` aggregate (median, or mean for moment statistics) and rep counts."""
    rows = list(rows)
    if not rows:
        raise FitError("empty table")
    groups = {(r.model, r.statistic) for r in rows}
    if len(groups) > 1:
        raise FitError(f"table mixes several (model, statistic) groups: {sorted(groups)}")
    if aggregate is None:
        aggregate = "mean" if rows[0].statistic == "moment" else "median"
    agg = {"median": np.median, "mean": np.mean}[aggregate]
    ns = sorted({r.n for r in rows})
    vals = {n: [r.value for r in rows if r.n == n] for n in ns}
    return np.array(ns), np.array([agg(vals[n]) for n in ns]), max(len(v) for v in vals.values())


def fit_log_rate(rows, regressor: str = "lognlogn", aggregate: Optional[str] = None) -> RateFit:
    """OLS of ``log(aggregate statistic)`` against ``log((log n)/n)`` or ``log n``."""
    ns, agg, reps = summarize(rows, aggregate)
    if ns.size < 2:
        raise FitError("need at least two distinct sample sizes")
    if np.any(~(agg > 0)):
        raise FitError("aggregated statistics must be positive")
    x = _regressor(ns, regressor)
    y = np.log(agg)
    res = stats.linregress(x, y)
    r2 = min(1.0, max(0.0, float(res.rvalue) ** 2))
    stderr = float(res.stderr) if ns.size > 2 else 0.0
    return RateFit(
        float(res.slope), float(res.intercept), stderr, r2, regressor,
        int(ns[0]), int(ns[-1]), int(reps),
    )


def localization_probability(plan: ExperimentPlan, n: int, workers: int = 1):
    """Fraction of replications whose global and windowed majorants disagree.

    Returns ``(estimate, binomial standard error)``.
    """
    if plan.statistic != "localization":
        raise InputError("plan statistic must be 'localization'")
    rows, _ = run_experiment(replace(plan, n_grid=(n,)), workers=workers)
    vals = np.array([r.value for r in rows])
    p = float(vals.mean())
    return p, math.sqrt(p * (1.0 - p) / vals.size)
