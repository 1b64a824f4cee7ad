"""Rectangular domains, blob kernels, evaluation grids and target densities.

All lengths are in inches.  Densities are immutable once built and every
evaluation method is vectorized over numpy arrays of coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from .errors import ParameterError

__all__ = [
    "Domain",
    "Kernel",
    "GAUSSIAN",
    "INDICATOR",
    "GridSpec",
    "ScalarField",
    "TargetDensity",
    "RingDensity",
    "RippleDensity",
    "GriddedDensity",
    "make_ring",
    "make_ripple",
    "make_gridded",
    "kernel_value",
    "disc_rect_area",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle ``[0, width] x [0, height]``."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ParameterError(f"domain sides must be positive, got {self.width}x{self.height}")
        if not (math.isfinite(self.width) and math.isfinite(self.height)):
            raise ParameterError("domain sides must be finite")

    def area(self) -> float:
        return self.width * self.height

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.width, self.height])

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return (
            (p[..., 0] >= 0.0)
            & (p[..., 0] <= self.width)
            & (p[..., 1] >= 0.0)
            & (p[..., 1] <= self.height)
        )

    def clamp(self, points) -> np.ndarray:
        return np.clip(np.asarray(points, dtype=float), 0.0, self.upper)


def _disc_quadrant_area(x, y, r):
    """Area of the disc of radius ``r`` at the origin within ``{p1 <= x, p2 <= y}``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = r * r

    def prim(t):
        # antiderivative of sqrt(r^2 - t^2)
        t = np.clip(t, -r, r)
        return 0.5 * (t * np.sqrt(np.maximum(r2 - t * t, 0.0)) + r2 * np.arcsin(t / r))

    xc = np.clip(x, -r, r)
    a = np.sqrt(np.maximum(r2 - y * y, 0.0))
    v1 = np.clip(xc, -r, -a)
    v2 = np.clip(xc, -a, a)
    v3 = np.clip(xc, a, r)
    outer = 2.0 * ((prim(v1) - prim(-r)) + (prim(v3) - prim(a)))
    middle = np.clip(y, -r, r) * (v2 + a) + prim(v2) - prim(-a)
    # for |y| >= r the middle strip has zero width
    return np.where(y > 0, outer, 0.0) + np.where(a > 0, middle, 0.0)


def disc_rect_area(cx, cy, r, x0, x1, y0, y1):
    """Exact area of ``disc(c, r) ∩ [x0, x1] x [y0, y1]`` (vectorized)."""
    if r <= 0:
        raise ParameterError("disc radius must be positive")
    cx = np.asarray(cx, dtype=float)
    cy = np.asarray(cy, dtype=float)
    F = _disc_quadrant_area
    ax0, ax1 = np.asarray(x0) - cx, np.asarray(x1) - cx
    ay0, ay1 = np.asarray(y0) - cy, np.asarray(y1) - cy
    area = F(ax1, ay1, r) - F(ax0, ay1, r) - F(ax1, ay0, r) + F(ax0, ay0, r)
    return np.maximum(area, 0.0)


@dataclass(frozen=True)
class Kernel:
    """Radially symmetric unit-mass blob shape.

    ``gaussian`` is the standard bivariate normal density; ``indicator`` is the
    constant ``1/pi`` on the closed unit disc.
    """

    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind not in ("gaussian", "indicator"):
            raise ParameterError(f"unknown kernel kind {self.kind!r}")

    @property
    def smooth(self) -> bool:
        return self.kind == "gaussian"

    @property
    def cutoff(self) -> float:
        """Support radius in units of delta used when stamping blobs on a grid."""
        return 8.0 if self.kind == "gaussian" else 1.0

    def profile(self, u2):
        """K evaluated at squared (scaled) radius ``u2``."""
        u2 = np.asarray(u2, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * u2) / (2.0 * np.pi)
        return np.where(u2 <= 1.0, 1.0 / np.pi, 0.0)

    def box_mass(self, cx, cy, delta, x0, x1, y0, y1):
        """Integral of ``K^delta(z - c)`` over the rectangle ``[x0,x1] x [y0,y1]``."""
        if delta <= 0:
            raise ParameterError("delta must be positive")
        cx = np.asarray(cx, dtype=float)
        cy = np.asarray(cy, dtype=float)
        if self.kind == "gaussian":
            s = _SQRT2 * delta
            mx = 0.5 * (erf((x1 - cx) / s) - erf((x0 - cx) / s))
            my = 0.5 * (erf((y1 - cy) / s) - erf((y0 - cy) / s))
            return mx * my
        return disc_rect_area(cx, cy, delta, x0, x1, y0, y1) / (np.pi * delta * delta)

    def domain_mass(self, positions, delta, domain: Domain):
        """Per-robot mass of the scaled kernel falling inside ``domain``."""
        p = np.asarray(positions, dtype=float).reshape(-1, 2)
        return self.box_mass(p[:, 0], p[:, 1], delta, 0.0, domain.width, 0.0, domain.height)

    def __str__(self):
        return self.kind


GAUSSIAN = Kernel("gaussian")
INDICATOR = Kernel("indicator")


def kernel_value(k: Kernel, dz, delta: float):
    """Scaled kernel ``K(dz / delta) / delta**2``; ``dz`` has trailing axis of length 2."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    dz = np.asarray(dz, dtype=float)
    u2 = np.sum(dz * dz, axis=-1) / (delta * delta)
    return k.profile(u2) / (delta * delta)


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid on a domain.

    ``m1`` and ``m2`` count nodes per axis.  With ``centered=True`` the nodes
    are cell centers of an ``m1 x m2`` cell partition (spacing ``w/m1``);
    otherwise they are cell corners including the boundary (spacing
    ``w/(m1-1)``).
    """

    domain: Domain
    m1: int
    m2: int
    centered: bool = True

    def __post_init__(self):
        if self.m1 < 2 or self.m2 < 2:
            raise ParameterError(f"grid needs at least 2 nodes per axis, got {self.m1}x{self.m2}")

    @property
    def spacing(self) -> tuple[float, float]:
        if self.centered:
            return self.domain.width / self.m1, self.domain.height / self.m2
        return self.domain.width / (self.m1 - 1), self.domain.height / (self.m2 - 1)

    @property
    def xs(self) -> np.ndarray:
        return self._axis(self.m1, self.domain.width)

    @property
    def ys(self) -> np.ndarray:
        return self._axis(self.m2, self.domain.height)

    def _axis(self, m, length):
        if self.centered:
            return (np.arange(m) + 0.5) * (length / m)
        return np.linspace(0.0, length, m)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    @classmethod
    def with_spacing(cls, domain: Domain, spacing: float, centered: bool = True) -> "GridSpec":
        """Smallest grid whose spacing does not exceed ``spacing`` on either axis."""
        if not spacing > 0:
            raise ParameterError("grid spacing must be positive")
        extra = 0 if centered else 1
        m1 = max(2, int(math.ceil(domain.width / spacing - 1e-9)) + extra)
        m2 = max(2, int(math.ceil(domain.height / spacing - 1e-9)) + extra)
        return cls(domain, m1, m2, centered)


@dataclass(frozen=True)
class ScalarField:
    """Node values on a :class:`GridSpec`, stored as an ``(m1, m2)`` array."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.m1 * self.grid.m2:
            raise ParameterError(
                f"expected {self.grid.m1 * self.grid.m2} values, got {v.size}"
            )
        v = v.reshape(self.grid.m1, self.grid.m2)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, f: Callable) -> "ScalarField":
        X, Y = grid.mesh()
        return cls(grid, f(X, Y))

    def row_major(self) -> np.ndarray:
        """Values flattened with x varying fastest."""
        return self.values.T.ravel()


class TargetDensity:
    """Normalized positive density on a domain.

    Subclasses implement :meth:`unnormalized`; evaluating the instance returns
    ``unnormalized / C``.
    """

    kind = "abstract"

    def __init__(self, domain: Domain):
        self.domain = domain
        self.normalization = 1.0

    def unnormalized(self, x, y):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x, y):
        return self.unnormalized(x, y) / self.normalization

    def values_on(self, grid: GridSpec) -> np.ndarray:
        X, Y = grid.mesh()
        return self(X, Y)

    def density_max(self) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def cell_masses(self, xedges, yedges, order: int = 4) -> np.ndarray:
        """Integral of the density over each cell of a tensor partition.

        The generic implementation uses ``order``-point Gauss-Legendre per
        cell and axis.
        """
        xedges = np.asarray(xedges, dtype=float)
        yedges = np.asarray(yedges, dtype=float)
        t, wts = np.polynomial.legendre.leggauss(order)
        hx = 0.5 * np.diff(xedges)
        hy = 0.5 * np.diff(yedges)
        cx = 0.5 * (xedges[1:] + xedges[:-1])
        cy = 0.5 * (yedges[1:] + yedges[:-1])
        total = np.zeros((cx.size, cy.size))
        for ti, wi in zip(t, wts):
            px = cx + hx * ti
            for tj, wj in zip(t, wts):
                py = cy + hy * tj
                total += wi * wj * self(px[:, None], py[None, :])
        return total * hx[:, None] * hy[None, :]

    def x_breaks(self) -> list:
        """x-values where line integrals of the density stop being smooth."""
        return []

    def y_breaks(self, x: float) -> list:
        """y-values where the density jumps or kinks along the line at ``x``."""
        return []

    def describe(self) -> dict:
        return {"kind": self.kind, "w": self.domain.width, "h": self.domain.height}


class RingDensity(TargetDensity):
    """Piecewise-constant annulus density centered in the domain."""

    kind = "ring"

    def __init__(self, domain: Domain, r1: float, r2: float, inner_weight: float, outer_weight: float):
        super().__init__(domain)
        if not (0 < r1 < r2):
            raise ParameterError(f"ring radii must satisfy 0 < r1 < r2, got {r1}, {r2}")
        if not (inner_weight > 0 and outer_weight > 0):
            raise ParameterError("ring weights must be positive")
        self.r1, self.r2 = float(r1), float(r2)
        self.inner_weight, self.outer_weight = float(inner_weight), float(outer_weight)
        self.center = (domain.width / 2.0, domain.height / 2.0)
        self.normalization = (
            self.outer_weight * domain.area()
            + (self.inner_weight - self.outer_weight) * self._annulus_area(0.0, domain.width, 0.0, domain.height)
        )

    def _annulus_area(self, x0, x1, y0, y1):
        cx, cy = self.center
        return disc_rect_area(cx, cy, self.r2, x0, x1, y0, y1) - disc_rect_area(cx, cy, self.r1, x0, x1, y0, y1)

    def in_annulus(self, x, y):
        d2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        return (d2 > self.r1 ** 2) & (d2 < self.r2 ** 2)

    def unnormalized(self, x, y):
        return np.where(self.in_annulus(x, y), self.inner_weight, self.outer_weight)

    def density_max(self) -> float:
        return max(self.inner_weight, self.outer_weight) / self.normalization

    def x_breaks(self) -> list:
        cx = self.center[0]
        return [cx - self.r2, cx - self.r1, cx + self.r1, cx + self.r2]

    def y_breaks(self, x: float) -> list:
        cx, cy = self.center
        out = []
        for r in (self.r1, self.r2):
            d2 = r * r - (x - cx) ** 2
            if d2 > 0:
                s = math.sqrt(d2)
                out += [cy - s, cy + s]
        return out

    def annulus_mass(self) -> float:
        """Probability mass of the open annulus inside the domain."""
        area = float(self._annulus_area(0.0, self.domain.width, 0.0, self.domain.height))
        return self.inner_weight * area / self.normalization

    def cell_masses(self, xedges, yedges, order: int = 4) -> np.ndarray:
        x0, x1 = np.asarray(xedges[:-1])[:, None], np.asarray(xedges[1:])[:, None]
        y0, y1 = np.asarray(yedges[:-1])[None, :], np.asarray(yedges[1:])[None, :]
        ann = self._annulus_area(x0, x1, y0, y1)
        area = (x1 - x0) * (y1 - y0)
        return (self.outer_weight * area + (self.inner_weight - self.outer_weight) * ann) / self.normalization

    def describe(self) -> dict:
        d = super().describe()
        d.update(r1=self.r1, r2=self.r2, inner_weight=self.inner_weight, outer_weight=self.outer_weight)
        return d


def _simpson_weights(n_nodes: int, length: float) -> np.ndarray:
    c = np.ones(n_nodes)
    c[1:-1:2] = 4.0
    c[2:-1:2] = 2.0
    return c * (length / (n_nodes - 1) / 3.0)


class RippleDensity(TargetDensity):
    """Smooth density ``2 + sin(3 pi |z|) + 2 z1^2/w^2 + z2^3/h^3``.

    ``radial_frequency`` defaults to ``3*pi`` per inch; ``length_scale``
    rescales the radius inside the sine (``|z| * length_scale``) and exists
    only for diagnosing unit conventions.
    """

    kind = "ripple"

    def __init__(self, domain: Domain, panels: int = 2000, length_scale: float = 1.0):
        super().__init__(domain)
        if panels < 1000 or panels % 2:
            raise ParameterError("ripple normalization needs an even panel count >= 1000")
        if not length_scale > 0:
            raise ParameterError("length_scale must be positive")
        self.length_scale = float(length_scale)
        self.panels = panels
        w, h = domain.width, domain.height
        grid = GridSpec(domain, panels + 1, panels + 1, centered=False)
        X, Y = grid.mesh()
        vals = self.unnormalized(X, Y)
        self.normalization = float(_simpson_weights(panels + 1, w) @ vals @ _simpson_weights(panels + 1, h))
        # grid maximum plus a Lipschitz margin over half a cell diagonal
        k = 3.0 * np.pi * self.length_scale
        lipschitz = k + 4.0 / w + 3.0 / h
        hx, hy = grid.spacing
        bound = min(6.0, float(vals.max()) + lipschitz * 0.5 * math.hypot(hx, hy))
        self._max = bound / self.normalization

    def unnormalized(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w, h = self.domain.width, self.domain.height
        r = np.sqrt(x * x + y * y) * self.length_scale
        return 2.0 + np.sin(3.0 * np.pi * r) + 2.0 * x * x / (w * w) + y ** 3 / h ** 3

    def density_max(self) -> float:
        return self._max

    def describe(self) -> dict:
        d = super().describe()
        if self.length_scale != 1.0:
            d["length_scale"] = self.length_scale
        return d


class GriddedDensity(TargetDensity):
    """Bilinear interpolant of positive values on a corner-node grid."""

    kind = "gridded"

    def __init__(self, field_: ScalarField):
        grid = field_.grid
        if grid.centered:
            # reinterpret: gridded data always lives on cell corners
            grid = GridSpec(grid.domain, grid.m1, grid.m2, centered=False)
        super().__init__(grid.domain)
        v = np.asarray(field_.values, dtype=float)
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            bad = np.argwhere(~(v > 0))[0] if np.any(~(v > 0)) else np.argwhere(~np.isfinite(v))[0]
            raise ParameterError(f"gridded density must be positive; node {tuple(int(i) for i in bad)} is {v[tuple(bad)]}")
        self.grid = grid
        self._values = v.copy()
        self._values.setflags(write=False)
        hx, hy = grid.spacing
        wx = np.full(grid.m1, hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(grid.m2, hy)
        wy[[0, -1]] *= 0.5
        # trapezoid rule integrates a bilinear interpolant exactly
        self.normalization = float(wx @ v @ wy)

    @property
    def node_values(self) -> np.ndarray:
        return self._values

    def unnormalized(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = self.grid
        hx, hy = g.spacing
        fx = np.clip(x / hx, 0.0, g.m1 - 1)
        fy = np.clip(y / hy, 0.0, g.m2 - 1)
        i = np.minimum(fx.astype(np.intp), g.m1 - 2)
        j = np.minimum(fy.astype(np.intp), g.m2 - 2)
        tx = fx - i
        ty = fy - j
        v = self._values
        return (
            (1 - tx) * (1 - ty) * v[i, j]
            + tx * (1 - ty) * v[i + 1, j]
            + (1 - tx) * ty * v[i, j + 1]
            + tx * ty * v[i + 1, j + 1]
        )

    def density_max(self) -> float:
        return float(self._values.max()) / self.normalization

    def x_breaks(self) -> list:
        return list(self.grid.xs[1:-1])

    def y_breaks(self, x: float) -> list:
        return list(self.grid.ys[1:-1])

    def describe(self) -> dict:
        d = super().describe()
        d.update(m1=self.grid.m1, m2=self.grid.m2)
        return d


def make_ring(w: float, h: float, r1: float, r2: float, inner_weight: float = 36.0, outer_weight: float = 1.0) -> RingDensity:
    return RingDensity(Domain(w, h), r1, r2, inner_weight, outer_weight)


def make_ripple(w: float, h: float, **kwargs) -> RippleDensity:
    return RippleDensity(Domain(w, h), **kwargs)


def make_gridded(field_: ScalarField) -> GriddedDensity:
    return GriddedDensity(field_)


# parameters of the two standard benchmark targets
RING_DEFAULTS = dict(w=48.0, h=70.0, r1=11.4, r2=20.6, inner_weight=36.0, outer_weight=1.0)
RIPPLE_DEFAULTS = dict(w=48.0, h=70.0)


def default_ring() -> RingDensity:
    return make_ring(**RING_DEFAULTS)


def default_ripple() -> RippleDensity:
    return make_ripple(**RIPPLE_DEFAULTS)
