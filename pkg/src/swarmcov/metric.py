"""Swarm blob function and the coverage error metrics built on it.

The blob function of a swarm is the sum of scaled kernels centered on the
robots, divided either by the kernel mass that falls inside the domain
(``normalization="domain"``, the default) or simply by the robot count
(``normalization="count"``).  The error metric is the L1 distance between
that function and a target density.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from . import kernels
from .density import GAUSSIAN, Domain, Kernel, TargetDensity, kernel_value
from .errors import ParameterError, QuadratureResolutionError
from .quadrature import QuadratureRule, default_rule, iterated_abs_integral

__all__ = [
    "SwarmConfig",
    "Trajectory",
    "Partition",
    "GridObjective",
    "blob_function",
    "error",
    "one_sided_error",
    "cumulative_error",
    "discretization_error",
    "pitfall_report",
    "reference_error",
    "error_series",
    "abs_difference_integrand",
]

NORMALIZATIONS = ("domain", "count")
BOUND_SLACK = 1e-6
_SQRT2PI = np.sqrt(2.0 * np.pi)


def _as_positions(positions) -> np.ndarray:
    p = np.array(positions, dtype=float)
    if p.ndim == 1 and p.size == 2:
        p = p.reshape(1, 2)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ParameterError(f"positions must have shape (N, 2), got {p.shape}")
    return p


@dataclass(frozen=True)
class SwarmConfig:
    """Robot positions with a shared blob radius and kernel."""

    positions: np.ndarray = field(repr=False)
    delta: float
    kernel: Kernel = GAUSSIAN

    def __post_init__(self):
        p = _as_positions(self.positions)
        if p.shape[0] < 1:
            raise ParameterError("a swarm needs at least one robot")
        if not np.all(np.isfinite(p)):
            raise ParameterError("robot positions must be finite")
        if not self.delta > 0:
            raise ParameterError(f"blob radius must be positive, got {self.delta}")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "delta", float(self.delta))
        if isinstance(self.kernel, str):
            object.__setattr__(self, "kernel", Kernel(self.kernel))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def check_domain(self, domain: Domain) -> None:
        inside = domain.contains(self.positions)
        if not np.all(inside):
            i = int(np.argmin(inside))
            x, y = self.positions[i]
            raise ParameterError(
                f"robot {i} at ({x:.6g}, {y:.6g}) lies outside the {domain.width}x{domain.height} domain"
            )


@dataclass(frozen=True)
class Trajectory:
    """Swarm snapshots at strictly increasing times (seconds)."""

    times: np.ndarray
    positions: np.ndarray = field(repr=False)  # (M, N, 2)
    delta: float
    kernel: Kernel = GAUSSIAN

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        p = np.array(self.positions, dtype=float)
        if t.size < 1:
            raise ParameterError("a trajectory needs at least one snapshot")
        if p.ndim != 3 or p.shape[0] != t.size or p.shape[2] != 2 or p.shape[1] < 1:
            raise ParameterError(f"positions must have shape (M={t.size}, N, 2), got {p.shape}")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("snapshot times must be strictly increasing")
        if not self.delta > 0:
            raise ParameterError(f"blob radius must be positive, got {self.delta}")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "delta", float(self.delta))
        if isinstance(self.kernel, str):
            object.__setattr__(self, "kernel", Kernel(self.kernel))

    def __len__(self):
        return self.times.size

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def snapshot(self, j: int) -> SwarmConfig:
        return SwarmConfig(self.positions[j], self.delta, self.kernel)


@dataclass(frozen=True)
class Partition:
    """Tensor tiling of the domain by cell edges along each axis."""

    domain: Domain
    xedges: np.ndarray
    yedges: np.ndarray

    def __post_init__(self):
        for name, e, length in (("x", self.xedges, self.domain.width), ("y", self.yedges, self.domain.height)):
            e = np.asarray(e, dtype=float)
            if e.ndim != 1 or e.size < 2:
                raise ParameterError(f"{name} edges need at least two entries")
            if np.any(np.diff(e) <= 0):
                raise ParameterError(f"{name} edges must be strictly increasing")
            if abs(e[0]) > 1e-12 or abs(e[-1] - length) > 1e-9 * max(1.0, length):
                raise ParameterError(f"{name} edges span [{e[0]}, {e[-1]}], not [0, {length}]")
            e = e.copy()
            e[0], e[-1] = 0.0, length
            e.setflags(write=False)
            object.__setattr__(self, f"{name}edges", e)

    @classmethod
    def regular(cls, domain: Domain, m1: int, m2: int | None = None) -> "Partition":
        m2 = m1 if m2 is None else m2
        if m1 < 1 or m2 < 1:
            raise ParameterError("tiling needs at least one cell per axis")
        return cls(domain, np.linspace(0, domain.width, m1 + 1), np.linspace(0, domain.height, m2 + 1))

    @classmethod
    def shifted(cls, domain: Domain, m1: int, m2: int | None = None, frac: float = 0.5) -> "Partition":
        """Regular tiling with every interior edge moved up by ``frac`` of a cell.

        Keeps ``m1 x m2`` cells; the first cell on each axis grows and the
        last one shrinks.
        """
        m2 = m1 if m2 is None else m2
        if not 0.0 < frac < 1.0:
            raise ParameterError("frac must lie strictly between 0 and 1")

        def edges(m, length):
            inner = (np.arange(1, m) + frac) * (length / m)
            return np.concatenate([[0.0], inner, [length]])

        return cls(domain, edges(m1, domain.width), edges(m2, domain.height))

    @property
    def shape(self) -> tuple[int, int]:
        return self.xedges.size - 1, self.yedges.size - 1

    @property
    def size(self) -> int:
        a, b = self.shape
        return a * b

    def areas(self) -> np.ndarray:
        return np.outer(np.diff(self.xedges), np.diff(self.yedges))

    def cells(self) -> list:
        """``(x0, x1, y0, y1)`` for every cell, x index outermost."""
        xe, ye = self.xedges, self.yedges
        return [(xe[i], xe[i + 1], ye[j], ye[j + 1]) for i in range(xe.size - 1) for j in range(ye.size - 1)]

    def locate(self, positions) -> tuple[np.ndarray, np.ndarray]:
        """Cell indices of each position; points on an edge go to the lower cell."""
        p = _as_positions(positions)
        i = np.clip(np.searchsorted(self.xedges, p[:, 0], side="left") - 1, 0, self.xedges.size - 2)
        j = np.clip(np.searchsorted(self.yedges, p[:, 1], side="left") - 1, 0, self.yedges.size - 2)
        return i, j

    def counts(self, positions) -> np.ndarray:
        i, j = self.locate(positions)
        m1, m2 = self.shape
        return np.bincount(i * m2 + j, minlength=m1 * m2).reshape(m1, m2)


def _canonical(p: np.ndarray) -> np.ndarray:
    # fixed summation order, so results do not depend on how robots are listed
    return np.lexsort((p[:, 1], p[:, 0]))


def _normalizer(kernel: Kernel, positions, delta, domain, normalization) -> float:
    if normalization == "count":
        return float(len(positions))
    if normalization == "domain":
        return float(np.sum(kernel.domain_mass(positions, delta, domain)))
    raise ParameterError(f"unknown normalization {normalization!r}; use one of {NORMALIZATIONS}")


def blob_function(cfg: SwarmConfig, domain: Domain, z, normalization: str = "domain"):
    """Swarm blob value at points ``z`` (trailing axis of length 2).

    Evaluated exactly, without the grid truncation used by :class:`GridObjective`.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 2:
        raise ParameterError("evaluation points need a trailing axis of length 2")
    denom = _normalizer(cfg.kernel, cfg.positions, cfg.delta, domain, normalization)
    flat = z.reshape(-1, 2)
    out = np.zeros(flat.shape[0])
    chunk = max(1, 2_000_000 // cfg.n)
    for s in range(0, flat.shape[0], chunk):
        dz = flat[s:s + chunk, None, :] - cfg.positions[None, :, :]
        out[s:s + chunk] = kernel_value(cfg.kernel, dz, cfg.delta).sum(axis=1)
    return (out / denom).reshape(z.shape[:-1])


class GridObjective:
    """Error metric and its gradient on a fixed quadrature rule.

    Target values and node weights are cached, so repeated evaluations for
    new positions or radii only pay for the blob field.
    """

    def __init__(self, rho: TargetDensity, rule: QuadratureRule, kernel: Kernel = GAUSSIAN,
                 normalization: str = "domain"):
        if rule.domain != rho.domain:
            raise ParameterError("quadrature rule and target density live on different domains")
        if normalization not in NORMALIZATIONS:
            raise ParameterError(f"unknown normalization {normalization!r}; use one of {NORMALIZATIONS}")
        self.rho = rho
        self.rule = rule
        self.kernel = Kernel(kernel) if isinstance(kernel, str) else kernel
        self.normalization = normalization
        self.domain = rho.domain
        self.xs = rule.grid.xs
        self.ys = rule.grid.ys
        self.weights = rule.weights
        self.target = rho.values_on(rule.grid)
        self._tiny = 1e-12 * float(np.max(self.target))

    @classmethod
    def for_delta(cls, rho: TargetDensity, delta: float, kernel: Kernel = GAUSSIAN,
                  normalization: str = "domain", max_spacing: float = 0.5) -> "GridObjective":
        return cls(rho, default_rule(rho.domain, delta, max_spacing), kernel, normalization)

    def raw_field(self, positions, delta: float) -> np.ndarray:
        p = _as_positions(positions)
        p = p[_canonical(p)]
        if self.kernel.kind == "gaussian":
            return kernels.gaussian_field(p[:, 0], p[:, 1], delta, self.xs, self.ys, self.kernel.cutoff)
        return kernels.indicator_field(p[:, 0], p[:, 1], delta, self.xs, self.ys)

    def denominator(self, positions, delta: float) -> float:
        p = _as_positions(positions)
        return _normalizer(self.kernel, p[_canonical(p)], delta, self.domain, self.normalization)

    def blob(self, positions, delta: float) -> np.ndarray:
        """Blob function on the rule's nodes."""
        if not delta > 0:
            raise ParameterError(f"blob radius must be positive, got {delta}")
        return self.raw_field(positions, delta) / self.denominator(positions, delta)

    def integrate_abs(self, diff: np.ndarray) -> float:
        return float(self.rule.apply(np.abs(diff)))

    def value(self, positions, delta: float) -> float:
        return self.integrate_abs(self.blob(positions, delta) - self.target)

    def value_and_grad(self, positions, delta: float, with_delta: bool = False):
        """Return ``(e, dE/dpositions, dE/ddelta or None)``.

        The gradient is the node-weighted sum of ``sign(blob - target)``
        times the derivative of the blob function, including the change of
        the in-domain kernel mass.  Nodes where the two functions agree to
        within round-off contribute nothing.
        """
        if self.kernel.kind != "gaussian":
            raise ParameterError("gradients are only available for the gaussian kernel")
        p0 = _as_positions(positions)
        order = _canonical(p0)
        p = p0[order]
        A = self.raw_field(p, delta)
        w, h = self.domain.width, self.domain.height
        x, y = p[:, 0], p[:, 1]
        if self.normalization == "domain":
            s = np.sqrt(2.0) * delta
            cx = 0.5 * (erf((w - x) / s) + erf(x / s))
            cy = 0.5 * (erf((h - y) / s) + erf(y / s))
            D = float(np.sum(cx * cy))
        else:
            D = float(p.shape[0])
        rho_n = A / D
        diff = rho_n - self.target
        e = self.integrate_abs(diff)
        S = np.where(np.abs(diff) > self._tiny, np.sign(diff), 0.0)
        W = S * self.weights
        sx, sy, sd = kernels.gaussian_grad(x, y, delta, self.xs, self.ys, W, self.kernel.cutoff, with_delta)
        grad = np.stack([sx, sy], axis=1) / D
        gdelta = None
        if with_delta:
            gdelta = float(np.sum(sd)) / D
        if self.normalization == "domain":
            srho = float(np.sum(W * rho_n))
            e0x, e1x = np.exp(-x * x / (2 * delta * delta)), np.exp(-(w - x) ** 2 / (2 * delta * delta))
            e0y, e1y = np.exp(-y * y / (2 * delta * delta)), np.exp(-(h - y) ** 2 / (2 * delta * delta))
            dcx = (e0x - e1x) / (_SQRT2PI * delta)
            dcy = (e0y - e1y) / (_SQRT2PI * delta)
            grad[:, 0] -= dcx * cy * srho / D
            grad[:, 1] -= cx * dcy * srho / D
            if with_delta:
                dcx_d = -((w - x) * e1x + x * e0x) / (_SQRT2PI * delta * delta)
                dcy_d = -((h - y) * e1y + y * e0y) / (_SQRT2PI * delta * delta)
                dD = float(np.sum(dcx_d * cy + cx * dcy_d))
                gdelta -= dD * srho / D
        out = np.empty_like(grad)
        out[order] = grad
        return e, out, gdelta


def _checked_bounds(value: float, hi: float, what: str) -> float:
    if value < -BOUND_SLACK or value > hi + BOUND_SLACK:
        raise QuadratureResolutionError(
            f"{what} = {value:.9g} lies outside [0, {hi}]; refine the quadrature grid"
        )
    return min(max(value, 0.0), hi)


def _objective(cfg: SwarmConfig, rho: TargetDensity, rule, normalization) -> GridObjective:
    cfg.check_domain(rho.domain)
    if rule is None:
        rule = default_rule(rho.domain, cfg.delta)
    elif rule.domain != rho.domain:
        raise ParameterError("quadrature rule and target density live on different domains")
    return GridObjective(rho, rule, cfg.kernel, normalization)


def error(cfg: SwarmConfig, rho: TargetDensity, rule: QuadratureRule | None = None,
          normalization: str = "domain") -> float:
    """L1 distance between the swarm blob function and ``rho``; lies in [0, 2]."""
    obj = _objective(cfg, rho, rule, normalization)
    return _checked_bounds(obj.value(cfg.positions, cfg.delta), 2.0, "error metric")


def one_sided_error(cfg: SwarmConfig, rho: TargetDensity, rule: QuadratureRule | None = None,
                    normalization: str = "domain") -> float:
    """Integral of ``rho - blob`` over the region where the swarm under-covers."""
    obj = _objective(cfg, rho, rule, normalization)
    diff = obj.target - obj.blob(cfg.positions, cfg.delta)
    val = float(obj.rule.apply(np.maximum(diff, 0.0)))
    return _checked_bounds(val, 1.0, "one-sided error")


def cumulative_error(traj: Trajectory, rho: TargetDensity, rule: QuadratureRule | None = None,
                     normalization: str = "domain") -> float:
    """L1 distance between the time-averaged blob function and ``rho``."""
    first = traj.snapshot(0)
    obj = _objective(first, rho, rule, normalization)
    acc = np.zeros_like(obj.target)
    for j in range(len(traj)):
        snap = traj.snapshot(j)
        snap.check_domain(rho.domain)
        acc += obj.blob(snap.positions, snap.delta)
    acc /= len(traj)
    return _checked_bounds(obj.integrate_abs(acc - obj.target), 2.0, "cumulative error")


def discretization_error(positions, rho: TargetDensity, part: Partition) -> float:
    """Sum over cells of ``|target cell mass - fraction of robots in the cell|``."""
    if isinstance(positions, SwarmConfig):
        positions = positions.positions
    p = _as_positions(positions)
    if part.domain != rho.domain:
        raise ParameterError("partition does not tile the density's domain")
    if not np.all(rho.domain.contains(p)):
        raise ParameterError("all positions must lie in the domain")
    masses = rho.cell_masses(part.xedges, part.yedges)
    frac = part.counts(p) / p.shape[0]
    return float(np.sum(np.abs(masses - frac)))


@dataclass(frozen=True)
class PitfallRow:
    m1: int
    m2: int
    cells: int
    mu: float


def pitfall_report(positions, rho: TargetDensity, tilings: Sequence) -> list[PitfallRow]:
    """Discretization error for each tiling.

    ``tilings`` holds ``(m1, m2)`` pairs for regular tilings or ready-made
    :class:`Partition` objects.
    """
    if len(tilings) < 2:
        raise ParameterError("a pitfall report needs at least two tilings")
    rows = []
    for t in tilings:
        part = t if isinstance(t, Partition) else Partition.regular(rho.domain, int(t[0]), int(t[1]))
        m1, m2 = part.shape
        rows.append(PitfallRow(m1, m2, m1 * m2, discretization_error(positions, rho, part)))
    return rows


def reference_error(cfg: SwarmConfig, rho: TargetDensity, normalization: str = "domain",
                    rtol: float = 1e-10, spacing: float | None = None):
    """High-accuracy error metric that tracks the kinks of the integrand.

    Meant as a reference for quadrature studies: jumps of the target and of
    an indicator blob are passed to the integrator as breakpoints, and the
    sign changes of ``blob - rho`` are located on every integration line.
    Returns ``(value, error_estimate)``.
    """
    cfg.check_domain(rho.domain)
    dom = rho.domain
    denom = _normalizer(cfg.kernel, cfg.positions, cfg.delta, dom, normalization)
    P = cfg.positions
    d = cfg.delta
    if spacing is None:
        spacing = d / 16.0
    norm = 1.0 / (2.0 * np.pi * d * d)

    if cfg.kernel.kind == "gaussian":
        def g(x, ys):
            gx = np.exp(-(x - P[:, 0]) ** 2 / (2 * d * d)) * norm
            gy = np.exp(-(ys[None, :] - P[:, 1:2]) ** 2 / (2 * d * d))
            return gx @ gy / denom - rho(x, ys)
        xb = list(rho.x_breaks())
        yb = rho.y_breaks
    else:
        def g(x, ys):
            return blob_function(cfg, dom, np.stack(np.broadcast_arrays(x, ys), -1), normalization) - rho(x, ys)
        xb = list(rho.x_breaks()) + list(P[:, 0] - d) + list(P[:, 0] + d)

        def yb(x):
            out = list(rho.y_breaks(x))
            r2 = d * d - (x - P[:, 0]) ** 2
            hit = r2 > 0
            s = np.sqrt(r2[hit])
            return out + list(P[hit, 1] - s) + list(P[hit, 1] + s)

    return iterated_abs_integral(g, dom, x_breaks=xb, y_breaks=yb, spacing=spacing, rtol=rtol)


def error_series(traj: Trajectory, rho: TargetDensity, rule: QuadratureRule | None = None,
                 normalization: str = "domain") -> np.ndarray:
    """Instantaneous error of every snapshot in a trajectory."""
    obj = _objective(traj.snapshot(0), rho, rule, normalization)
    out = np.empty(len(traj))
    for j in range(len(traj)):
        snap = traj.snapshot(j)
        snap.check_domain(rho.domain)
        out[j] = _checked_bounds(obj.value(snap.positions, snap.delta), 2.0, "error metric")
    return out


def abs_difference_integrand(cfg: SwarmConfig, rho: TargetDensity, normalization: str = "domain"):
    """``f(X, Y) = |blob - rho|`` on a tensor mesh, for quadrature studies."""
    cfg.check_domain(rho.domain)
    denom = _normalizer(cfg.kernel, cfg.positions, cfg.delta, rho.domain, normalization)
    P = cfg.positions

    def f(X, Y):
        xs, ys = np.asarray(X)[:, 0], np.asarray(Y)[0, :]
        if cfg.kernel.kind == "gaussian":
            A = kernels.gaussian_field(P[:, 0], P[:, 1], cfg.delta, xs, ys, cfg.kernel.cutoff)
        else:
            A = kernels.indicator_field(P[:, 0], P[:, 1], cfg.delta, xs, ys)
        return np.abs(A / denom - rho(X, Y))

    return f
