"""Tensor-product quadrature on the rectangular domain.

Three composite rules are provided (rectangle on cell centers, trapezoid and
Simpson on cell corners) together with the tools for a convergence study:
reference integrators and a log-log power-law fit of the observed error.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .density import Domain, GridSpec
from .errors import EvaluationError, FitError, ParameterError

__all__ = [
    "QuadratureRule",
    "integrate",
    "default_rule",
    "ConvergenceStudy",
    "convergence_study",
    "fit_power_law",
    "simpson_reference",
    "gauss_kronrod",
    "iterated_abs_integral",
    "smooth_control",
]

RULE_KINDS = ("rectangle", "trapezoid", "simpson")


def _axis_weights(kind: str, m: int, length: float) -> np.ndarray:
    if kind == "rectangle":
        return np.full(m, length / m)
    h = length / (m - 1)
    if kind == "trapezoid":
        w = np.full(m, h)
        w[[0, -1]] *= 0.5
        return w
    c = np.ones(m)
    c[1:-1:2] = 4.0
    c[2:-1:2] = 2.0
    return c * (h / 3.0)


@dataclass(frozen=True)
class QuadratureRule:
    """A composite rule on a tensor grid.

    ``grid.centered`` must be True for the rectangle rule and False for the
    trapezoid and Simpson rules; Simpson also needs odd node counts.
    """

    kind: str
    grid: GridSpec
    wx: np.ndarray = field(init=False, repr=False, compare=False)
    wy: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ParameterError(f"unknown quadrature rule {self.kind!r}")
        g = self.grid
        if (self.kind == "rectangle") != g.centered:
            need = "cell-center" if self.kind == "rectangle" else "cell-corner"
            raise ParameterError(f"{self.kind} rule needs a {need} grid")
        if self.kind == "simpson" and (g.m1 % 2 == 0 or g.m2 % 2 == 0):
            raise ParameterError(f"simpson rule needs odd node counts, got {g.m1}x{g.m2}")
        wx = _axis_weights(self.kind, g.m1, g.domain.width)
        wy = _axis_weights(self.kind, g.m2, g.domain.height)
        wx.setflags(write=False)
        wy.setflags(write=False)
        object.__setattr__(self, "wx", wx)
        object.__setattr__(self, "wy", wy)

    @classmethod
    def make(cls, kind: str, domain: Domain, m1: int, m2: int | None = None) -> "QuadratureRule":
        m2 = m1 if m2 is None else m2
        return cls(kind, GridSpec(domain, m1, m2, centered=(kind == "rectangle")))

    @property
    def domain(self) -> Domain:
        return self.grid.domain

    @property
    def weights(self) -> np.ndarray:
        """Full ``(m1, m2)`` node-weight matrix."""
        return np.outer(self.wx, self.wy)

    def apply(self, values) -> float:
        """Weighted sum of node values already sampled on this rule's grid."""
        v = np.asarray(values, dtype=float)
        return float(self.wx @ v @ self.wy)

    def describe(self) -> str:
        return f"{self.kind}:{self.grid.m1}x{self.grid.m2}"


def default_rule(domain: Domain, delta: float, max_spacing: float = 0.5) -> QuadratureRule:
    """Production rule: rectangle rule with spacing at most ``min(delta/4, max_spacing)``."""
    if not delta > 0:
        raise ParameterError("delta must be positive")
    grid = GridSpec.with_spacing(domain, min(delta / 4.0, max_spacing), centered=True)
    return QuadratureRule("rectangle", grid)


def integrate(rule: QuadratureRule, f) -> float:
    """Integrate ``f`` over the domain with ``rule``.

    ``f`` is either a callable ``f(X, Y)`` evaluated on the node mesh or an
    array of node values with shape ``(m1, m2)``.
    """
    if callable(f):
        X, Y = rule.grid.mesh()
        values = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != (rule.grid.m1, rule.grid.m2):
            raise ParameterError(f"node values have shape {values.shape}, rule expects {(rule.grid.m1, rule.grid.m2)}")
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        x, y = rule.grid.xs[i], rule.grid.ys[j]
        raise EvaluationError(f"integrand is {values[i, j]} at node ({i}, {j}) = ({x:.6g}, {y:.6g})")
    return rule.apply(values)


def fit_power_law(m_values: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``E = 10**a * m**b``; returns ``(a, b)``.

    Entries with ``E == 0`` carry no slope information and are dropped.
    """
    m = np.asarray(m_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > 0
    if keep.sum() < 3:
        raise FitError("power-law fit needs at least 3 nonzero errors")
    b, a = np.polyfit(np.log10(m[keep]), np.log10(e[keep]), 1)
    return float(a), float(b)


@dataclass
class ConvergenceStudy:
    rows: list  # (rule, m, E_m)
    fits: dict  # rule -> (a, b)
    reference: float

    def slope(self, rule: str) -> float:
        return self.fits[rule][1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rule,m,E_m\n")
        for rule, m, e in self.rows:
            buf.write(f"{rule},{m},{e:.17g}\n")
        fit_txt = "; ".join(f"{r} a={a:.6g} b={b:.6g}" for r, (a, b) in self.fits.items())
        buf.write(f"# fit E_m = 10^a m^b: {fit_txt}; reference={self.reference:.17g}\n")
        return buf.getvalue()


def convergence_study(
    f: Callable,
    domain: Domain,
    rules: Iterable[str],
    m_values: Sequence[int],
    reference: float,
) -> ConvergenceStudy:
    """Tabulate ``|Q_m(f) - reference|`` for each rule and node count ``m``.

    ``m`` is the number of nodes per axis.  For Simpson an even ``m`` is
    replaced by ``m + 1``.
    """
    m_values = list(m_values)
    if len(m_values) < 3:
        raise FitError("convergence study needs at least 3 node counts")
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ParameterError("m_values must be strictly ascending")
    rows, fits = [], {}
    for kind in rules:
        ms, errs = [], []
        for m in m_values:
            mm = m + 1 if (kind == "simpson" and m % 2 == 0) else m
            rule = QuadratureRule.make(kind, domain, mm)
            err = abs(integrate(rule, f) - reference)
            rows.append((kind, mm, err))
            ms.append(mm)
            errs.append(err)
        fits[kind] = fit_power_law(ms, errs)
    return ConvergenceStudy(rows, fits, reference)


def smooth_control(domain: Domain):
    """Smooth test integrand ``cos(x/15) exp(y/40)`` and its exact integral.

    Its odd derivatives do not vanish on the boundary, so the composite
    rules show their textbook orders instead of end-point superconvergence.
    """
    w, h = domain.width, domain.height

    def f(x, y):
        return np.cos(x / 15.0) * np.exp(y / 40.0)

    return f, 15.0 * math.sin(w / 15.0) * 40.0 * math.expm1(h / 40.0)


def simpson_reference(f: Callable, domain: Domain, rtol: float = 1e-8, start: int = 65, max_nodes: int = 8193):
    """Simpson's rule on doubling grids until successive values agree to ``rtol``.

    Returns ``(value, converged)``; suited to smooth integrands only.
    """
    m = start if start % 2 else start + 1
    prev = integrate(QuadratureRule.make("simpson", domain, m), f)
    while 2 * m - 1 <= max_nodes:
        m = 2 * m - 1
        cur = integrate(QuadratureRule.make("simpson", domain, m), f)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, True
        prev = cur
    return prev, False


# Gauss-Kronrod 7/15 nodes on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GK_WG = np.zeros(15)
_GK_WG[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:3], _WG[2::-1]])
_GK_WG[7] = _WG[3]


def gauss_kronrod(f: Callable, breaks: Sequence[float], rtol: float = 1e-10, atol: float = 1e-14, max_rounds: int = 60):
    """Globally adaptive G7/K15 quadrature of a vectorized 1-D function.

    ``breaks`` lists the interval endpoints plus any interior points where
    ``f`` is known to be non-smooth.  Returns ``(value, error_estimate)``.
    """
    b = np.unique(np.asarray(breaks, dtype=float))
    if b.size < 2:
        raise ParameterError("need at least two breakpoints")
    lo, hi = b[:-1], b[1:]
    span = b[-1] - b[0]
    done = 0.0
    err_done = 0.0
    for _ in range(max_rounds):
        c = 0.5 * (lo + hi)
        hw = 0.5 * (hi - lo)
        pts = c[:, None] + hw[:, None] * _GK_NODES[None, :]
        vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        k = hw * (vals @ _GK_WK)
        err = np.abs(k - hw * (vals @ _GK_WG))
        tol = max(atol, rtol * abs(done + k.sum()))
        bad = err > tol * (hi - lo) / span
        done += k[~bad].sum()
        err_done += err[~bad].sum()
        if not bad.any():
            return float(done), float(err_done)
        lo, hi = lo[bad], hi[bad]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return float(done + k[bad].sum()), float(err_done + err[bad].sum())


_GL_T, _GL_W = np.polynomial.legendre.leggauss(12)


def _abs_line(g: Callable, breaks: np.ndarray, spacing: float) -> float:
    """``∫ |g|`` along one line, with ``g`` smooth between ``breaks``.

    Sign changes are bracketed on a sample mesh of the given spacing,
    refined by bisection, and each sign-definite piece is integrated with
    12-point Gauss-Legendre.
    """
    pieces = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        n = max(2, int(math.ceil((b - a) / spacing)) + 1)
        t = np.linspace(a, b, n)
        # sample strictly inside the piece so one-sided limits are used at breaks
        eps = 1e-12 * (b - a)
        t_eval = t.copy()
        t_eval[0] += eps
        t_eval[-1] -= eps
        v = g(t_eval)
        flips = np.nonzero(np.signbit(v[:-1]) != np.signbit(v[1:]))[0]
        roots = []
        if flips.size:
            left = t_eval[flips].copy()
            right = t_eval[flips + 1].copy()
            sl = np.signbit(v[flips])
            for _ in range(60):
                mid = 0.5 * (left + right)
                sm = np.signbit(g(mid))
                same = sm == sl
                left = np.where(same, mid, left)
                right = np.where(same, right, mid)
            roots = list(0.5 * (left + right))
        edges = np.concatenate([[a], np.asarray(roots), t[1:-1], [b]])
        pieces.append(np.sort(edges))
    if not pieces:
        return 0.0
    edges = np.concatenate(pieces)
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    c = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)
    pts = c[:, None] + hw[:, None] * _GL_T[None, :]
    vals = np.asarray(g(pts.ravel()), dtype=float).reshape(pts.shape)
    return float(np.sum(np.abs(hw * (vals @ _GL_W))))


def iterated_abs_integral(
    g: Callable,
    domain: Domain,
    x_breaks: Sequence[float] = (),
    y_breaks: Callable | None = None,
    spacing: float = 0.1,
    rtol: float = 1e-10,
):
    """High-accuracy ``∫∫ |g(x, y)| dy dx`` for piecewise-smooth ``g``.

    ``g(x, ys)`` evaluates one vertical line (scalar ``x``, array ``ys``).
    ``y_breaks(x)`` returns interior y-values where ``g`` jumps on that line;
    ``x_breaks`` are x-values where the line integral is non-smooth.  The
    kinks of ``|g|`` are located per line (see :func:`_abs_line`), so
    ``spacing`` must resolve the narrowest sign-definite region.

    Returns ``(value, error_estimate)`` of the outer adaptive integration.
    """
    w, h = domain.width, domain.height

    def line(xv):
        out = np.empty(np.size(xv))
        for i, x in enumerate(np.atleast_1d(xv)):
            yb = [0.0, h]
            if y_breaks is not None:
                yb += [v for v in y_breaks(float(x)) if 0.0 < v < h]
            out[i] = _abs_line(lambda ys, x=float(x): g(x, ys), np.unique(yb), spacing)
        return out

    xb = [0.0, w] + [v for v in x_breaks if 0.0 < v < w]
    return gauss_kronrod(line, xb, rtol=rtol, atol=1e-15)
