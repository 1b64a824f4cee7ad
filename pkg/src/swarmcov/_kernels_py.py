"""Pure numpy implementation of the blob-field kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension.  Gaussian blobs are truncated where
``|z_k - x_k| > cutoff * delta`` along either axis.
"""
import numpy as np


def _factors(p, nodes, delta, reach):
    d = nodes[None, :] - p[:, None]
    g = np.exp(-(d * d) / (2.0 * delta * delta))
    g[np.abs(d) > reach] = 0.0
    return d, g


def gaussian_field(px, py, delta, xs, ys, cutoff):
    """Sum over robots of the scaled Gaussian blob at every grid node."""
    reach = cutoff * delta
    _, gx = _factors(np.asarray(px, float), np.asarray(xs, float), delta, reach)
    _, gy = _factors(np.asarray(py, float), np.asarray(ys, float), delta, reach)
    return (gx.T @ gy) / (2.0 * np.pi * delta * delta)


def gaussian_grad(px, py, delta, xs, ys, weights, cutoff, with_delta):
    """Weighted node sums of the blob derivatives, one entry per robot.

    Returns ``(sx, sy, sd)`` with ``sx[i] = sum_k W_k d/dx_i1 K(z_k - x_i)``,
    ``sy`` likewise for the second coordinate and ``sd`` the derivative with
    respect to delta (``None`` unless ``with_delta``).
    """
    reach = cutoff * delta
    W = np.asarray(weights, float)
    dx, gx = _factors(np.asarray(px, float), np.asarray(xs, float), delta, reach)
    dy, gy = _factors(np.asarray(py, float), np.asarray(ys, float), delta, reach)
    norm = 1.0 / (2.0 * np.pi * delta * delta)
    T = W @ gy.T  # (m1, n)
    U = W.T @ gx.T  # (m2, n)
    s0 = np.einsum("ij,ji->i", gx, T)
    sx = np.einsum("ij,ji->i", gx * dx, T) * (norm / delta ** 2)
    sy = np.einsum("ij,ji->i", gy * dy, U) * (norm / delta ** 2)
    sd = None
    if with_delta:
        r2 = np.einsum("ij,ji->i", gx * dx * dx, T) + np.einsum("ij,ji->i", gy * dy * dy, U)
        sd = norm * (r2 / delta ** 3 - 2.0 * s0 / delta)
    return sx, sy, sd


def indicator_field(px, py, delta, xs, ys):
    """Sum over robots of the scaled disc indicator at every grid node."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    out = np.zeros((xs.size, ys.size))
    val = 1.0 / (np.pi * delta * delta)
    r2 = delta * delta
    for x, y in zip(np.asarray(px, float), np.asarray(py, float)):
        j0 = np.searchsorted(xs, x - delta, side="left")
        j1 = np.searchsorted(xs, x + delta, side="right")
        k0 = np.searchsorted(ys, y - delta, side="left")
        k1 = np.searchsorted(ys, y + delta, side="right")
        if j0 >= j1 or k0 >= k1:
            continue
        dx = xs[j0:j1] - x
        dy = ys[k0:k1] - y
        inside = dx[:, None] ** 2 + dy[None, :] ** 2 <= r2
        out[j0:j1, k0:k1] += np.where(inside, val, 0.0)
    return out
