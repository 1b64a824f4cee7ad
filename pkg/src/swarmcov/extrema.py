"""Best local minima and maxima of the coverage error by multistart search.

Each start runs projected gradient descent with Barzilai-Borwein step
guesses and Armijo backtracking inside the domain box.  Minimization uses a
blob-radius continuation: the swarm is first fitted with wide blobs, which
gives robots far from the target mass a useful gradient, and the radius is
then shrunk to its final value in a few stages.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng
from .density import GAUSSIAN, Kernel, RingDensity, TargetDensity
from .errors import FitError, ParameterError
from .metric import GridObjective, SwarmConfig
from .quadrature import QuadratureRule, default_rule

__all__ = [
    "OptimizerSettings",
    "StartRecord",
    "OptimumResult",
    "ExtremaResult",
    "projected_gradient",
    "minimize_error",
    "maximize_error",
    "find_extrema",
    "minimize_error_with_delta",
    "design_sweep",
    "SweepResult",
    "KDE_EXPONENT",
]

KDE_EXPONENT = -1.0 / 6.0


@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs for one multistart search.

    ``continuation`` lists blob-radius multipliers applied in turn during
    minimization (the last should be 1); ``jitter`` is the standard
    deviation, in units of the stage radius, of the random nudge given to
    every robot before each stage after the first.
    """

    max_iterations: int = 1500
    gtol: float = 1e-8
    ftol: float = 1e-7
    fd_step: float = 1e-5
    backtrack: float = 0.5
    armijo: float = 1e-4
    starts: int = 50
    seed: int = 0
    continuation: tuple = (8.0, 5.0, 3.0, 2.0, 1.5, 1.0)
    jitter: float = 0.02
    grid_spacing: float | None = None
    grid_nodes: tuple | None = None
    normalization: str = "domain"
    workers: int = 1

    def __post_init__(self):
        for name in ("gtol", "ftol", "fd_step", "armijo"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ParameterError("backtrack factor must lie in (0, 1)")
        if self.max_iterations < 1 or self.starts < 1:
            raise ParameterError("max_iterations and starts must be at least 1")
        if not self.continuation or any(c <= 0 for c in self.continuation):
            raise ParameterError("continuation multipliers must be positive")
        if self.jitter < 0:
            raise ParameterError("jitter must be non-negative")
        object.__setattr__(self, "continuation", tuple(float(c) for c in self.continuation))


@dataclass(frozen=True)
class StartRecord:
    index: int
    seed: int
    converged: bool
    iterations: int
    value: float
    reason: str
    delta: float


@dataclass
class OptimumResult:
    """Best local optimum over all starts in one direction."""

    sense: str  # "min" or "max"
    value: float
    config: SwarmConfig
    records: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return any(r.converged for r in self.records)

    @property
    def best_record(self) -> StartRecord:
        return min(self.records, key=self._rank)

    def _rank(self, r: StartRecord):
        return (r.value if self.sense == "min" else -r.value, r.index)


@dataclass
class ExtremaResult:
    minimum: OptimumResult
    maximum: OptimumResult

    @property
    def e_minus(self) -> float:
        return self.minimum.value

    @property
    def e_plus(self) -> float:
        return self.maximum.value

    @property
    def argmin(self) -> SwarmConfig:
        return self.minimum.config

    @property
    def argmax(self) -> SwarmConfig:
        return self.maximum.config


def projected_gradient(fun: Callable, x0: np.ndarray, lo, hi, settings: OptimizerSettings,
                       max_iterations: int | None = None):
    """Minimize ``fun`` over the box ``[lo, hi]``.

    ``fun(x)`` returns ``(f, grad)``.  Returns ``(x, f, iterations,
    converged, reason)``; every iterate lies in the box and accepted steps
    never increase ``f``.
    """
    max_it = settings.max_iterations if max_iterations is None else max_iterations
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    f, g = fun(x)
    history = [f]
    x_old = g_old = None
    alpha = 1.0
    for it in range(1, max_it + 1):
        pg = np.clip(x - g, lo, hi) - x
        if np.max(np.abs(pg)) < settings.gtol:
            return x, f, it - 1, True, "gradient"
        if x_old is not None:
            s = (x - x_old).ravel()
            y = (g - g_old).ravel()
            sy = float(s @ y)
            alpha = float(s @ s) / sy if sy > 0 else 1e4
            alpha = min(max(alpha, 1e-6), 1e8)
        while True:
            xn = np.clip(x - alpha * g, lo, hi)
            step = xn - x
            if not np.any(step):
                return x, f, it - 1, True, "stationary"
            fn, gn = fun(xn)
            if fn <= f + settings.armijo * float(np.sum(g * step)):
                break
            alpha *= settings.backtrack
            if alpha < 1e-14:
                return x, f, it - 1, True, "linesearch"
        x_old, g_old = x, g
        x, f, g = xn, fn, gn
        history.append(f)
        if len(history) > 5 and abs(history[-6] - f) <= settings.ftol * max(1.0, abs(f)):
            return x, f, it, True, "ftol"
    return x, f, max_it, False, "max_iterations"


def _grid_for(rho: TargetDensity, delta: float, settings: OptimizerSettings):
    if settings.grid_nodes is not None:
        return QuadratureRule.make("rectangle", rho.domain, *settings.grid_nodes)
    spacing = settings.grid_spacing if settings.grid_spacing is not None else min(delta / 4.0, 0.5)
    return default_rule(rho.domain, delta, max_spacing=spacing)


def _initial_positions(init, rho: TargetDensity, n: int, gen: np.random.Generator, index: int, delta: float):
    dom = rho.domain
    if isinstance(init, str):
        if init == "uniform":
            return gen.uniform([0, 0], dom.upper, size=(n, 2))
        if init == "annulus":
            if not isinstance(rho, RingDensity):
                raise ParameterError("annulus seeding needs a ring target")
            cx, cy = rho.center
            out = np.empty((0, 2))
            while out.shape[0] < n:
                cand = gen.uniform([cx - rho.r2, cy - rho.r2], [cx + rho.r2, cy + rho.r2], size=(4 * n, 2))
                keep = rho.in_annulus(cand[:, 0], cand[:, 1]) & dom.contains(cand)
                out = np.vstack([out, cand[keep]])
            return out[:n]
        raise ParameterError(f"unknown init mode {init!r}")
    arr = np.asarray(init, dtype=float)
    if arr.shape == (4,):
        x0, y0, x1, y1 = arr
        if not (0 <= x0 < x1 <= dom.width and 0 <= y0 < y1 <= dom.height):
            raise ParameterError(f"seeding region {tuple(arr)} is not a sub-rectangle of the domain")
        return gen.uniform([x0, y0], [x1, y1], size=(n, 2))
    if arr.shape != (n, 2):
        raise ParameterError(f"initial positions must have shape ({n}, 2), got {arr.shape}")
    if index == 0:
        return arr.copy()
    return dom.clamp(arr + gen.normal(0.0, 0.5 * delta, size=arr.shape))


def _schedule(settings: OptimizerSettings, init, index: int) -> tuple:
    # a caller-supplied configuration is refined as is on the first start
    if index == 0 and not isinstance(init, str) and np.shape(init) != (4,):
        return (1.0,)
    return settings.continuation


def _position_run(rho, n, delta, kernel, settings, init, index, sense):
    gen = rng.stream(settings.seed, "start", index)
    start_seed = int(gen.integers(2 ** 63))
    P = _initial_positions(init, rho, n, gen, index, delta)
    obj = GridObjective(rho, _grid_for(rho, delta, settings), kernel, settings.normalization)
    lo, hi = np.zeros(2), rho.domain.upper
    sign = 1.0 if sense == "min" else -1.0
    schedule = _schedule(settings, init, index) if sense == "min" else (1.0,)
    total_it = 0
    converged, reason = False, ""
    for k, mult in enumerate(schedule):
        d = delta * mult
        if k > 0 and settings.jitter > 0:
            P = rho.domain.clamp(P + gen.normal(0.0, settings.jitter * d, size=P.shape))

        def fun(x, d=d):
            e, g, _ = obj.value_and_grad(x, d)
            return sign * e, sign * g

        P, f, it, converged, reason = projected_gradient(fun, P, lo, hi, settings)
        total_it += it
    value = obj.value(P, delta)
    return StartRecord(index, start_seed, converged, total_it, value, reason, delta), P


def _run_starts(task, settings: OptimizerSettings, args):
    idx = range(settings.starts)
    if settings.workers > 1 and settings.starts > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as ex:
            futures = [ex.submit(task, *args, i) for i in idx]
            return [fut.result() for fut in futures]
    return [task(*args, i) for i in idx]


def _pos_task(rho, n, delta, kernel, settings, init, sense, index):
    return _position_run(rho, n, delta, kernel, settings, init, index, sense)


def _collect(sense, outcomes, delta_of, kernel) -> OptimumResult:
    records = [r for r, _ in outcomes]
    key = (lambda r: (r.value, r.index)) if sense == "min" else (lambda r: (-r.value, r.index))
    best = min(records, key=key)
    P = outcomes[best.index][1]
    return OptimumResult(sense, best.value, SwarmConfig(P, delta_of(best), kernel), records)


def _check(n: int, delta: float):
    if n < 1:
        raise ParameterError("N must be at least 1")
    if not delta > 0:
        raise ParameterError("delta must be positive")


def minimize_error(rho: TargetDensity, n: int, delta: float, settings: OptimizerSettings = OptimizerSettings(),
                   init="uniform", kernel: Kernel = GAUSSIAN) -> OptimumResult:
    """Best local minimum of the error metric over ``settings.starts`` starts.

    ``init`` is ``"uniform"``, ``"annulus"`` (ring targets), a region
    ``(x0, y0, x1, y1)`` or an ``(n, 2)`` array used for the first start
    and perturbed for the rest.
    """
    _check(n, delta)
    outcomes = _run_starts(_pos_task, settings, (rho, n, delta, kernel, settings, init, "min"))
    return _collect("min", outcomes, lambda r: delta, kernel)


def maximize_error(rho: TargetDensity, n: int, delta: float, settings: OptimizerSettings = OptimizerSettings(),
                   init="uniform", kernel: Kernel = GAUSSIAN) -> OptimumResult:
    """Best local maximum of the error metric (no radius continuation)."""
    _check(n, delta)
    outcomes = _run_starts(_pos_task, settings, (rho, n, delta, kernel, settings, init, "max"))
    return _collect("max", outcomes, lambda r: delta, kernel)


def find_extrema(rho: TargetDensity, n: int, delta: float, settings: OptimizerSettings = OptimizerSettings(),
                 init="uniform", kernel: Kernel = GAUSSIAN) -> ExtremaResult:
    return ExtremaResult(minimize_error(rho, n, delta, settings, init, kernel),
                         maximize_error(rho, n, delta, settings, init, kernel))


def _joint_run(rho, n, bounds, kernel, settings, init, index):
    lo_d, hi_d = bounds
    gen = rng.stream(settings.seed, "joint", index)
    start_seed = int(gen.integers(2 ** 63))
    init, d0 = init
    P = _initial_positions(init, rho, n, gen, index, d0)
    obj = GridObjective(rho, _grid_for(rho, lo_d, settings), kernel, settings.normalization)
    # positions first, with the radius fixed at its starting value
    total_it = 0
    for k, mult in enumerate(_schedule(settings, init, index)):
        d = d0 * mult
        if k > 0 and settings.jitter > 0:
            P = rho.domain.clamp(P + gen.normal(0.0, settings.jitter * d, size=P.shape))

        def fun(x, d=d):
            e, g, _ = obj.value_and_grad(x, d)
            return e, g

        P, _, it, _, _ = projected_gradient(fun, P, np.zeros(2), rho.domain.upper, settings)
        total_it += it
    # then positions and log-radius together
    lo = np.concatenate([np.zeros(2 * n), [math.log(lo_d)]])
    hi = np.concatenate([np.tile(rho.domain.upper, n), [math.log(hi_d)]])
    x0 = np.concatenate([P.ravel(), [math.log(d0)]])

    def joint(x):
        d = math.exp(x[-1])
        e, g, gd = obj.value_and_grad(x[:-1].reshape(n, 2), d, with_delta=True)
        return e, np.concatenate([g.ravel(), [gd * d]])

    x, f, it, converged, reason = projected_gradient(joint, x0, lo, hi, settings)
    total_it += it
    d = math.exp(x[-1])
    P = x[:-1].reshape(n, 2)
    value = obj.value(P, d)
    return StartRecord(index, start_seed, converged, total_it, value, reason, d), P


def _joint_task(rho, n, bounds, kernel, settings, init, index):
    return _joint_run(rho, n, bounds, kernel, settings, init, index)


def minimize_error_with_delta(rho: TargetDensity, n: int, settings: OptimizerSettings = OptimizerSettings(),
                              delta_bounds: tuple = (0.5, 8.0), init="uniform", delta0: float | None = None,
                              kernel: Kernel = GAUSSIAN):
    """Jointly optimize positions and the blob radius within ``delta_bounds``.

    The radius is optimized through its logarithm.  Each start first fits
    positions at ``delta0`` (default: geometric mean of the bounds), then
    frees the radius.  Returns ``(result, delta_star)``.
    """
    lo, hi = map(float, delta_bounds)
    if not 0 < lo < hi:
        raise ParameterError(f"delta bounds must satisfy 0 < lo < hi, got {delta_bounds}")
    if n < 1:
        raise ParameterError("N must be at least 1")
    d0 = math.sqrt(lo * hi) if delta0 is None else min(max(float(delta0), lo), hi)
    outcomes = _run_starts(_joint_task, settings, (rho, n, (lo, hi), kernel, settings, (init, d0)))
    res = _collect("min", outcomes, lambda r: r.delta, kernel)
    return res, res.config.delta


@dataclass
class SweepRow:
    n: int
    delta_star: float
    e_min: float
    converged: bool


@dataclass
class SweepResult:
    rows: list
    exponent: float
    prefactor: float
    kde_exponent: float = KDE_EXPONENT
    results: list = field(default_factory=list, repr=False)

    def to_csv(self) -> str:
        lines = ["N,delta_star,e_min,converged"]
        lines += [f"{r.n},{r.delta_star:.10g},{r.e_min:.10g},{int(r.converged)}" for r in self.rows]
        lines.append(f"# fit delta_star = {self.prefactor:.6g} * N^{self.exponent:.6g}; kde reference exponent {self.kde_exponent:.6g}")
        return "\n".join(lines) + "\n"


def fit_exponent(ns: Sequence[float], deltas: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit ``log delta = log C + p log N``; returns ``(p, C)``."""
    ns = np.asarray(ns, dtype=float)
    ds = np.asarray(deltas, dtype=float)
    if ns.size < 2:
        raise FitError("exponent fit needs at least two points")
    p, logc = np.polyfit(np.log(ns), np.log(ds), 1)
    return float(p), float(math.exp(logc))


def design_sweep(rho: TargetDensity, n_values: Sequence[int], settings: OptimizerSettings = OptimizerSettings(),
                 delta_bounds: tuple = (0.5, 8.0), warm_start: bool = True, init="uniform",
                 kernel: Kernel = GAUSSIAN, progress: Callable | None = None) -> SweepResult:
    """Optimal blob radius and error for a range of swarm sizes.

    With ``warm_start`` each size's first start is the previous size's
    argmin padded with robots drawn from ``rho``, and the previous radius
    is used as the starting radius.
    """
    from .statistics import sample_positions

    ns = sorted(int(n) for n in n_values)
    if len(ns) < 4:
        raise ParameterError("a design sweep needs at least four swarm sizes")
    rows, results = [], []
    prev = None
    for n in ns:
        run_init, d0 = init, None
        if warm_start and prev is not None:
            extra = sample_positions(rho, n - prev.config.n, rng.stream(settings.seed, "pad", n))
            run_init = np.vstack([prev.config.positions, extra])
            d0 = prev.config.delta
        res, dstar = minimize_error_with_delta(rho, n, settings, delta_bounds, run_init, d0, kernel)
        rows.append(SweepRow(n, dstar, res.value, res.converged))
        results.append(res)
        prev = res
        if progress is not None:
            progress(rows[-1])
    good = [r for r in rows if r.converged]
    if len(good) < 2:
        raise FitError("fewer than two converged sizes; cannot fit the radius exponent")
    p, c = fit_exponent([r.n for r in good], [r.delta_star for r in good])
    return SweepResult(rows, p, c, KDE_EXPONENT, results)
