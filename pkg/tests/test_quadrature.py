import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmcov.density import Domain
from swarmcov.errors import EvaluationError, FitError, ParameterError
from swarmcov.quadrature import (
    QuadratureRule, convergence_study, default_rule, fit_power_law, gauss_kronrod, integrate,
    iterated_abs_integral, simpson_reference, smooth_control,
)

DOM = Domain(48.0, 70.0)


@pytest.mark.parametrize("kind,m", [("rectangle", 10), ("trapezoid", 11), ("simpson", 11)])
def test_rules_integrate_constants(kind, m):
    assert integrate(QuadratureRule.make(kind, DOM, m, m + 4 if kind != "simpson" else m + 2), lambda x, y: 1.0) == pytest.approx(48 * 70)


@given(st.integers(0, 3), st.integers(0, 3))
def test_simpson_exact_for_cubics(i, j):
    rule = QuadratureRule.make("simpson", DOM, 5, 7)
    exact = 48 ** (i + 1) / (i + 1) * 70 ** (j + 1) / (j + 1)
    assert integrate(rule, lambda x, y: x ** i * y ** j) == pytest.approx(exact, rel=1e-12)


def test_trapezoid_exact_for_bilinear():
    rule = QuadratureRule.make("trapezoid", DOM, 2)
    assert integrate(rule, lambda x, y: 1 + x + y + x * y) == pytest.approx(48 * 70 + 48 ** 2 / 2 * 70 + 70 ** 2 / 2 * 48 + 48 ** 2 * 70 ** 2 / 4)


def test_rule_grid_validation():
    with pytest.raises(ParameterError):
        QuadratureRule.make("simpson", DOM, 10)
    with pytest.raises(ParameterError):
        QuadratureRule.make("midpoint", DOM, 10)


def test_nonfinite_integrand_reports_node():
    rule = QuadratureRule.make("trapezoid", DOM, 5)
    with pytest.raises(EvaluationError, match=r"node \(0, 0\)"), np.errstate(divide="ignore"):
        integrate(rule, lambda x, y: 1.0 / (x + y))


def test_array_shape_checked():
    with pytest.raises(ParameterError):
        integrate(QuadratureRule.make("rectangle", DOM, 4), np.ones((3, 3)))


def test_default_rule_spacing():
    r = default_rule(DOM, 2.0)
    assert r.kind == "rectangle"
    assert max(r.grid.spacing) <= 0.5
    r = default_rule(DOM, 1.0)
    assert max(r.grid.spacing) <= 0.25


def test_power_law_fit_recovers_slope():
    m = np.array([10, 20, 40, 80])
    a, b = fit_power_law(m, 3.0 * m ** -2.0)
    assert b == pytest.approx(-2.0)
    assert 10 ** a == pytest.approx(3.0)
    with pytest.raises(FitError):
        fit_power_law([1, 2, 3], [1.0, 0.0, 0.0])


def test_smooth_convergence_orders():
    f, exact = smooth_control(DOM)
    study = convergence_study(f, DOM, ["rectangle", "trapezoid", "simpson"], [9, 17, 33, 65, 129], exact)
    assert study.slope("rectangle") == pytest.approx(-2.0, abs=0.1)
    assert study.slope("trapezoid") == pytest.approx(-2.0, abs=0.1)
    assert study.slope("simpson") == pytest.approx(-4.0, abs=0.2)
    text = study.to_csv()
    assert text.startswith("rule,m,E_m\n") and "# fit" in text


def test_study_needs_three_sizes():
    with pytest.raises(FitError):
        convergence_study(lambda x, y: x, DOM, ["trapezoid"], [5, 9], 0.0)


def test_simpson_reference_smooth():
    v, ok = simpson_reference(lambda x, y: np.cos(x / 10) * y, DOM, rtol=1e-12)
    assert ok
    assert v == pytest.approx(10 * math.sin(4.8) * 70 ** 2 / 2, rel=1e-11)


def test_gauss_kronrod_with_kink():
    v, est = gauss_kronrod(lambda x: np.abs(x - 0.3), [0.0, 0.3, 1.0], rtol=1e-13)
    assert v == pytest.approx(0.3 ** 2 / 2 + 0.7 ** 2 / 2, rel=1e-13)
    v, _ = gauss_kronrod(np.sqrt, [0.0, 1.0], rtol=1e-10)
    assert v == pytest.approx(2 / 3, rel=1e-9)


def test_iterated_abs_integral_finds_sign_changes():
    dom = Domain(2.0, 3.0)
    # |x - y| over [0,2]x[0,3]: is 17/3
    v, _ = iterated_abs_integral(lambda x, ys: x - ys, dom, spacing=0.05)
    assert v == pytest.approx(17 / 3, rel=1e-11)
