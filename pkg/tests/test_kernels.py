import numpy as np
import pytest

from swarmcov import _kernels_py, kernels

compiled = pytest.importorskip("swarmcov._kernels")


@pytest.fixture
def case():
    g = np.random.default_rng(0)
    px, py = g.uniform(0, 48, 37), g.uniform(0, 70, 37)
    xs, ys = (np.arange(96) + 0.5) * 0.5, (np.arange(140) + 0.5) * 0.5
    return px, py, xs, ys, g.standard_normal((96, 140))


def test_backend_selected_at_import():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("delta", [0.3, 2.0, 9.0])
def test_gaussian_field_backends_agree(case, delta):
    px, py, xs, ys, _ = case
    a = compiled.gaussian_field(px, py, delta, xs, ys, 8.0)
    b = _kernels_py.gaussian_field(px, py, delta, xs, ys, 8.0)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15 * b.max())


@pytest.mark.parametrize("with_delta", [False, True])
def test_gaussian_grad_backends_agree(case, with_delta):
    px, py, xs, ys, W = case
    a = compiled.gaussian_grad(px, py, 2.0, xs, ys, W, 8.0, with_delta)
    b = _kernels_py.gaussian_grad(px, py, 2.0, xs, ys, W, 8.0, with_delta)
    for u, v in zip(a, b):
        if v is None:
            assert u is None
        else:
            assert np.allclose(u, v, rtol=1e-10, atol=1e-12 * np.abs(v).max())


def test_indicator_field_backends_agree(case):
    px, py, xs, ys, _ = case
    a = compiled.indicator_field(px, py, 1.7, xs, ys)
    b = _kernels_py.indicator_field(px, py, 1.7, xs, ys)
    assert np.array_equal(a, b)


def test_truncation_cutoff(case):
    xs = np.array([0.0, 15.9, 16.1])
    f = _kernels_py.gaussian_field(np.array([0.0]), np.array([0.0]), 2.0, xs, np.array([0.0]), 8.0)
    assert f[1, 0] > 0 and f[2, 0] == 0
    g = compiled.gaussian_field(np.array([0.0]), np.array([0.0]), 2.0, xs, np.array([0.0]), 8.0)
    assert np.array_equal(f > 0, g > 0)
