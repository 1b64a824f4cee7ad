"""Reference stochastic controller: independent Metropolis random walkers.

Each robot proposes a Gaussian step, stays put if the proposal leaves the
domain, and otherwise accepts with probability ``min(1, rho(x')/rho(x))``.
The stationary law of every walker is therefore the target density, which
makes the walkers a known-good controller for exercising the benchmarks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .density import GAUSSIAN, Kernel, TargetDensity
from .errors import ParameterError
from .metric import Trajectory

__all__ = ["WalkerSettings", "run_walkers"]


@dataclass(frozen=True)
class WalkerSettings:
    """``snapshots`` counts recorded configurations including the initial one."""

    sigma_step: float = 2.0
    steps_per_snapshot: int = 10
    snapshots: int = 100
    seed: int = 0
    init: object = "uniform"  # "uniform", "corner" or an (N, 2) array
    dt: float = 1.0
    corner_size: float = 2.0

    def __post_init__(self):
        if not self.sigma_step > 0:
            raise ParameterError("sigma_step must be positive")
        if self.steps_per_snapshot < 1:
            raise ParameterError("steps_per_snapshot must be at least 1")
        if self.snapshots < 2:
            raise ParameterError("need at least 2 snapshots")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")


def _initial(rho: TargetDensity, n: int, s: WalkerSettings) -> np.ndarray:
    dom = rho.domain
    gen = rng.stream(s.seed, "walker-init")
    if isinstance(s.init, str):
        if s.init == "uniform":
            return gen.uniform((0.0, 0.0), dom.upper, size=(n, 2))
        if s.init == "corner":
            c = min(s.corner_size, dom.width, dom.height)
            return gen.uniform(0.0, c, size=(n, 2))
        raise ParameterError(f"unknown walker init {s.init!r}")
    p = np.asarray(s.init, dtype=float)
    if p.shape != (n, 2):
        raise ParameterError(f"initial positions must have shape ({n}, 2), got {p.shape}")
    if not np.all(dom.contains(p)):
        raise ParameterError("initial positions must lie in the domain")
    return p.copy()


def run_walkers(rho: TargetDensity, n: int, delta: float, kernel: Kernel = GAUSSIAN,
                settings: WalkerSettings = WalkerSettings()) -> Trajectory:
    """Simulate ``n`` walkers and return the recorded trajectory.

    Walker ``i`` draws from the stream keyed by ``(seed, i)``, a block of
    ``steps_per_snapshot`` steps at a time, so the result does not depend on
    how walkers are grouped for evaluation.
    """
    if n < 1:
        raise ParameterError("need at least one walker")
    if not delta > 0:
        raise ParameterError("delta must be positive")
    s = settings
    dom = rho.domain
    upper = dom.upper
    x = _initial(rho, n, s)
    px = rho(x[:, 0], x[:, 1])
    streams = [rng.stream(s.seed, "walker", i) for i in range(n)]
    k = s.steps_per_snapshot
    frames = np.empty((s.snapshots, n, 2))
    frames[0] = x
    for j in range(1, s.snapshots):
        steps = np.empty((k, n, 2))
        u = np.empty((k, n))
        for i, g in enumerate(streams):
            steps[:, i, :] = g.normal(0.0, s.sigma_step, size=(k, 2))
            u[:, i] = g.random(k)
        for step, ui in zip(steps, u):
            y = x + step
            inside = np.all((y >= 0.0) & (y <= upper), axis=1)
            py = np.where(inside, rho(np.clip(y[:, 0], 0, upper[0]), np.clip(y[:, 1], 0, upper[1])), 0.0)
            accept = inside & (ui * px < py)
            x = np.where(accept[:, None], y, x)
            px = np.where(accept, py, px)
        frames[j] = x
    times = np.arange(s.snapshots) * k * s.dt
    return Trajectory(times, frames, delta, kernel)
