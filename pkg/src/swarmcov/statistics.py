"""Sampling distribution of the coverage error and controller benchmarks.

Robot positions drawn independently from the target density give an error
value whose distribution is close to normal.  This module estimates that
distribution by Monte Carlo, compares a controller's steady-state errors to
it with F and Welch t tests, and runs the settling-time analysis used to
score a controller against the extrema bounds.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import erf

from . import rng
from .density import GAUSSIAN, Kernel, TargetDensity
from .errors import (AnalysisError, EfficiencyError, FitError, ParameterError, SettlingError,
                     StatisticalTestError)
from .metric import GridObjective
from .quadrature import QuadratureRule, default_rule

__all__ = [
    "sample_positions",
    "ErrorDistribution",
    "estimate_error_distribution",
    "fit_normal_cdf",
    "betainc",
    "student_t_sf",
    "student_t_ppf",
    "f_sf",
    "FTestResult",
    "TTestResult",
    "two_sample_f_test",
    "two_sample_t_test",
    "SettlingAnalysis",
    "settling_analysis",
    "relative_error",
    "performance_band",
    "BenchmarkVerdict",
    "benchmark_controller",
]

ALPHA = 0.05
NONNORMAL_RMS = 0.05


# ---------------------------------------------------------------- sampling

def sample_positions(rho: TargetDensity, n: int, seed=0, batch: int | None = None) -> np.ndarray:
    """``n`` independent draws from ``rho`` by rejection from the uniform law.

    ``seed`` is an integer or a ``numpy.random.Generator``.
    """
    if n < 0:
        raise ParameterError("sample count must be non-negative")
    gen = seed if isinstance(seed, np.random.Generator) else rng.stream(int(seed), "sample")
    dom = rho.domain
    cap = rho.density_max()
    out = []
    have = 0
    proposed = accepted = 0
    batch = batch or max(256, 2 * n)
    while have < n:
        z = gen.uniform((0.0, 0.0), dom.upper, size=(batch, 2))
        u = gen.uniform(0.0, cap, size=batch)
        keep = z[u < rho(z[:, 0], z[:, 1])]
        out.append(keep)
        have += keep.shape[0]
        proposed += batch
        accepted += keep.shape[0]
        if proposed >= 1_000_000 and accepted < 1e-4 * proposed:
            raise EfficiencyError(
                f"rejection sampler accepted {accepted} of {proposed} proposals; the density is too peaked"
            )
    if n == 0:
        return np.empty((0, 2))
    return np.vstack(out)[:n]


# ------------------------------------------------------------ distribution

def _normal_cdf(z, mu, sigma):
    return 0.5 * (1.0 + erf((z - mu) / (sigma * math.sqrt(2.0))))


def fit_normal_cdf(samples) -> tuple[float, float, float]:
    """Least-squares fit of a normal CDF to the empirical CDF.

    Plotting positions are ``k/M`` for the ``k``-th smallest sample.
    Returns ``(mu, sigma, rms_residual)``.
    """
    e = np.sort(np.asarray(samples, dtype=float))
    m = e.size
    if m < 30:
        raise FitError(f"normal fit needs at least 30 samples, got {m}")
    p = np.arange(1, m + 1) / m
    mu0, s0 = float(e.mean()), float(e.std(ddof=1))
    if not s0 > 0:
        raise FitError("samples have zero spread")
    (mu, sigma), _ = curve_fit(_normal_cdf, e, p, p0=(mu0, s0))
    sigma = abs(float(sigma))
    rms = float(np.sqrt(np.mean((_normal_cdf(e, mu, sigma) - p) ** 2)))
    return float(mu), sigma, rms


@dataclass
class ErrorDistribution:
    samples: np.ndarray = field(repr=False)
    mu_fit: float
    sigma_fit: float
    mean: float
    std: float
    rms: float
    n: int = 0
    delta: float = 0.0
    seed: int = 0

    @property
    def normal(self) -> bool:
        return self.rms <= NONNORMAL_RMS

    @classmethod
    def from_samples(cls, samples, **meta) -> "ErrorDistribution":
        s = np.sort(np.asarray(samples, dtype=float))
        if np.any((s < 0) | (s > 2)):
            raise ParameterError("error samples must lie in [0, 2]")
        mu, sigma, rms = fit_normal_cdf(s)
        return cls(s, mu, sigma, float(s.mean()), float(s.std(ddof=1)), rms, **meta)

    def cdf_table(self) -> np.ndarray:
        """Rows ``(e, empirical, fitted)`` at every sorted sample."""
        m = self.samples.size
        emp = np.arange(1, m + 1) / m
        return np.column_stack([self.samples, emp, _normal_cdf(self.samples, self.mu_fit, self.sigma_fit)])

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * ((z - self.mu_fit) / self.sigma_fit) ** 2) / (self.sigma_fit * math.sqrt(2 * math.pi))


def _draw_errors(obj: GridObjective, n: int, delta: float, seed: int, indices) -> np.ndarray:
    out = np.empty(len(indices))
    for j, k in enumerate(indices):
        P = sample_positions(obj.rho, n, rng.stream(seed, "draw", int(k)))
        out[j] = obj.value(P, delta)
    return out


def estimate_error_distribution(rho: TargetDensity, n: int, delta: float, kernel: Kernel = GAUSSIAN,
                                m: int = 1000, rule: QuadratureRule | None = None, seed: int = 0,
                                normalization: str = "count", workers: int = 1) -> ErrorDistribution:
    """Monte Carlo estimate of the error distribution for ``n`` i.i.d. robots.

    Draw ``k`` uses the stream keyed by ``(seed, k)``.  The blob function is
    divided by the robot count by default.
    """
    if m < 30:
        raise ParameterError("need at least 30 Monte Carlo draws")
    if n < 1 or not delta > 0:
        raise ParameterError("need n >= 1 and delta > 0")
    rule = rule or default_rule(rho.domain, delta)
    obj = GridObjective(rho, rule, kernel, normalization)
    if workers > 1:
        chunks = np.array_split(np.arange(m), workers)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_draw_errors, [obj] * len(chunks), [n] * len(chunks), [delta] * len(chunks),
                                [seed] * len(chunks), chunks))
        samples = np.concatenate(parts)
    else:
        samples = _draw_errors(obj, n, delta, seed, np.arange(m))
    return ErrorDistribution.from_samples(samples, n=n, delta=delta, seed=seed)


# --------------------------------------------------- special functions

def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ParameterError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lbt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lbt) * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, dof: float) -> float:
    """Upper tail ``P(T > t)`` of Student's t."""
    tail = 0.5 * betainc(0.5 * dof, 0.5, dof / (dof + t * t))
    return tail if t >= 0 else 1.0 - tail


def student_t_ppf(q: float, dof: float) -> float:
    """Quantile of Student's t by bracketing and bisection on the CDF."""
    if not 0.0 < q < 1.0:
        raise ParameterError("quantile level must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -student_t_ppf(1.0 - q, dof)
    lo, hi = 0.0, 1.0
    while 1.0 - student_t_sf(hi, dof) < q:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - student_t_sf(mid, dof) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail ``P(F > f)`` of the F distribution."""
    if f <= 0:
        return 1.0
    return betainc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))


# --------------------------------------------------------- two-sample tests

def _moments(x, name):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise StatisticalTestError(f"sample {name} needs at least 2 values, has {x.size}")
    v = float(np.var(x, ddof=1))
    if not v > 0:
        raise StatisticalTestError(f"sample {name} has zero variance")
    return x.size, float(np.mean(x)), v


@dataclass(frozen=True)
class FTestResult:
    statistic: float
    dof_num: int
    dof_den: int
    p_value: float

    def reject(self, alpha: float = ALPHA) -> bool:
        return self.p_value < alpha


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    dof: float
    p_value: float
    difference: float
    ci: tuple

    def reject(self, alpha: float = ALPHA) -> bool:
        return self.p_value < alpha


def two_sample_f_test(a, b) -> FTestResult:
    """Two-tailed variance-ratio test with the larger variance on top."""
    na, _, va = _moments(a, "a")
    nb, _, vb = _moments(b, "b")
    if va >= vb:
        F, d1, d2 = va / vb, na - 1, nb - 1
    else:
        F, d1, d2 = vb / va, nb - 1, na - 1
    p = min(1.0, 2.0 * f_sf(F, d1, d2))
    return FTestResult(F, d1, d2, p)


def two_sample_t_test(a, b, level: float = 0.95) -> TTestResult:
    """Welch's unequal-variance t test for ``mean(a) - mean(b)``."""
    na, ma, va = _moments(a, "a")
    nb, mb, vb = _moments(b, "b")
    qa, qb = va / na, vb / nb
    se = math.sqrt(qa + qb)
    dof = (qa + qb) ** 2 / (qa * qa / (na - 1) + qb * qb / (nb - 1))
    diff = ma - mb
    t = diff / se
    p = min(1.0, 2.0 * student_t_sf(abs(t), dof))
    half = student_t_ppf(0.5 + 0.5 * level, dof) * se
    return TTestResult(t, dof, p, diff, (diff - half, diff + half))


# ---------------------------------------------------------------- settling

@dataclass(frozen=True)
class SettlingAnalysis:
    alpha: float
    beta: float
    tau: float
    t_settle: float
    e_q3: float
    degenerate: bool = False
    steady_count: int = 0


def _linear_fit(t, e, tau):
    X = np.column_stack([np.ones_like(t), np.exp(-t / tau)])
    coef, *_ = np.linalg.lstsq(X, e, rcond=None)
    r = e - X @ coef
    return float(r @ r), coef


def settling_analysis(times, values, grid_size: int = 200) -> SettlingAnalysis:
    """Fit ``alpha + beta * exp(-t / tau)`` and summarize the settled part.

    ``tau`` is found by a log-spaced scan followed by golden-section search
    over ``log tau``; ``alpha`` and ``beta`` are solved linearly for each
    trial ``tau``.  The settling time is ``4 tau`` and ``e_q3`` is the upper
    quartile (linear interpolation) of the values after it.
    """
    t = np.asarray(times, dtype=float).ravel()
    e = np.asarray(values, dtype=float).ravel()
    if t.size != e.size:
        raise ParameterError("times and values differ in length")
    if t.size < 10:
        raise ParameterError("settling analysis needs at least 10 points")
    if np.any(np.diff(t) <= 0):
        raise ParameterError("times must be strictly increasing")
    t0 = t[0]
    ts = t - t0
    span = ts[-1]
    tau_lo = float(np.min(np.diff(t))) / 10.0
    tau_hi = 10.0 * span
    logs = np.linspace(math.log(tau_lo), math.log(tau_hi), grid_size)
    sse = np.array([_linear_fit(ts, e, math.exp(s))[0] for s in logs])
    scale = float(np.sum((e - e.mean()) ** 2))
    degenerate = scale <= 1e-24 * max(1.0, float(e @ e))
    if degenerate:
        log_tau = logs[0]
    else:
        k = int(np.argmin(sse))
        a, b = logs[max(k - 1, 0)], logs[min(k + 1, logs.size - 1)]
        g = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = b - g * (b - a), a + g * (b - a)
        fc, fd = _linear_fit(ts, e, math.exp(c))[0], _linear_fit(ts, e, math.exp(d))[0]
        for _ in range(200):
            if b - a < 1e-12:
                break
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - g * (b - a)
                fc = _linear_fit(ts, e, math.exp(c))[0]
            else:
                a, c, fc = c, d, fd
                d = a + g * (b - a)
                fd = _linear_fit(ts, e, math.exp(d))[0]
        log_tau = 0.5 * (a + b)
    tau = math.exp(log_tau)
    _, (alpha, beta) = _linear_fit(ts, e, tau)
    if degenerate:
        beta = 0.0
        alpha = float(e.mean())
    # express the amplitude relative to the original time origin
    beta = float(beta) * math.exp(t0 / tau) if not degenerate else 0.0
    t_settle = 4.0 * tau
    if t_settle >= t[-1]:
        raise SettlingError(
            f"trajectory too short: settling time {t_settle:.6g} s is beyond the last sample at {t[-1]:.6g} s"
        )
    tail = e[t > t_settle]
    if tail.size == 0:
        raise SettlingError("no samples after the settling time")
    q3 = float(np.percentile(tail, 75))
    return SettlingAnalysis(float(alpha), beta, tau, t_settle, q3, degenerate, int(tail.size))


# ----------------------------------------------------------- relative error

BANDS = ((0.10, "quite close"), (0.30, "intermediate"))


def relative_error(e_observed: float, e_minus: float, e_plus: float) -> float:
    """Position of ``e_observed`` between the best and worst realizable errors.

    Not clamped: values outside ``[0, 1]`` mean the observation beat a bound.
    """
    if not e_plus > e_minus:
        raise ParameterError(f"need e_plus > e_minus, got {e_plus} <= {e_minus}")
    return (e_observed - e_minus) / (e_plus - e_minus)


def performance_band(e_rel: float) -> str:
    if e_rel < 0.10:
        return "quite close"
    if e_rel >= 0.30:
        return "rather poor"
    return "intermediate"


# --------------------------------------------------------------- benchmark

@dataclass(frozen=True)
class BenchmarkVerdict:
    f_test: FTestResult
    t_test: TTestResult
    sampled_mean: float
    alpha: float = ALPHA

    @property
    def consistent(self) -> bool:
        return not (self.f_test.reject(self.alpha) or self.t_test.reject(self.alpha))

    @property
    def mean_excess_bound(self) -> float:
        """Largest plausible relative surplus of the controller mean (CI upper end / sampled mean)."""
        return self.t_test.ci[1] / self.sampled_mean

    def summary(self) -> str:
        f, t = self.f_test, self.t_test
        lines = [
            f"F = {f.statistic:.4f} (dof {f.dof_num}, {f.dof_den}), p = {f.p_value:.4g}: "
            + ("variances differ" if f.reject(self.alpha) else "no evidence the variances differ"),
            f"t = {t.statistic:.4f} (dof {t.dof:.1f}), p = {t.p_value:.4g}: "
            + ("means differ" if t.reject(self.alpha) else "no evidence the means differ"),
            f"95% CI for controller minus sampled mean: ({t.ci[0]:.5f}, {t.ci[1]:.5f})",
        ]
        if self.consistent:
            lines.append("controller errors are consistent with independent sampling from the target")
        elif t.reject(self.alpha) and t.difference > 0:
            lines.append(f"controller mean error exceeds the sampled mean by at most {100 * self.mean_excess_bound:.2f}%")
        elif t.reject(self.alpha):
            lines.append(f"controller mean error is below the sampled mean by at least {-100 * t.ci[1] / self.sampled_mean:.2f}%")
        return "\n".join(lines)


def benchmark_controller(steady_state_errors, dist: ErrorDistribution, require_normal: bool = True) -> BenchmarkVerdict:
    """Compare a controller's steady-state errors with the sampling distribution."""
    x = np.asarray(steady_state_errors, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("no controller errors given")
    if require_normal and not dist.normal:
        raise AnalysisError(f"sampling distribution is not close to normal (fit RMS {dist.rms:.3g})")
    return BenchmarkVerdict(two_sample_f_test(x, dist.samples), two_sample_t_test(x, dist.samples),
                            float(np.mean(dist.samples)))
