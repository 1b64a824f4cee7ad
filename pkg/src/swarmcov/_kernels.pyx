# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled blob-field kernels.

Each robot only touches the nodes inside its truncation box, so the cost is
O(N * box) rather than O(N * grid).  Signatures mirror ``_kernels_py``.
"""
import numpy as np
from libc.math cimport exp, M_PI


cdef inline Py_ssize_t _lower(const double[::1] a, double v) nogil:
    # first index with a[i] >= v
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] a, double v) nogil:
    # first index with a[i] > v
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def gaussian_field(px, py, double delta, xs, ys, double cutoff):
    cdef const double[::1] cx = np.ascontiguousarray(px, dtype=np.float64)
    cdef const double[::1] cy = np.ascontiguousarray(py, dtype=np.float64)
    cdef const double[::1] gxs = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] gys = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = cx.shape[0], m1 = gxs.shape[0], m2 = gys.shape[0]
    out = np.zeros((m1, m2), dtype=np.float64)
    cdef double[:, ::1] A = out
    cdef double[::1] fx = np.empty(m1), fy = np.empty(m2)
    cdef double inv = 1.0 / (2.0 * delta * delta)
    cdef double norm = 1.0 / (2.0 * M_PI * delta * delta)
    cdef double reach = cutoff * delta
    cdef Py_ssize_t i, j, k, j0, j1, k0, k1
    cdef double d, a
    with nogil:
        for i in range(n):
            j0 = _lower(gxs, cx[i] - reach)
            j1 = _upper(gxs, cx[i] + reach)
            k0 = _lower(gys, cy[i] - reach)
            k1 = _upper(gys, cy[i] + reach)
            if j0 >= j1 or k0 >= k1:
                continue
            for j in range(j0, j1):
                d = gxs[j] - cx[i]
                fx[j] = exp(-d * d * inv)
            for k in range(k0, k1):
                d = gys[k] - cy[i]
                fy[k] = exp(-d * d * inv) * norm
            for j in range(j0, j1):
                a = fx[j]
                for k in range(k0, k1):
                    A[j, k] += a * fy[k]
    return out


def gaussian_grad(px, py, double delta, xs, ys, weights, double cutoff, bint with_delta):
    cdef const double[::1] cx = np.ascontiguousarray(px, dtype=np.float64)
    cdef const double[::1] cy = np.ascontiguousarray(py, dtype=np.float64)
    cdef const double[::1] gxs = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] gys = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = cx.shape[0], m1 = gxs.shape[0], m2 = gys.shape[0]
    sx_arr = np.zeros(n)
    sy_arr = np.zeros(n)
    sd_arr = np.zeros(n)
    cdef double[::1] sx = sx_arr, sy = sy_arr, sd = sd_arr
    cdef double[::1] fx = np.empty(m1), fy = np.empty(m2)
    cdef double[::1] ddx = np.empty(m1), ddy = np.empty(m2)
    cdef double inv = 1.0 / (2.0 * delta * delta)
    cdef double norm = 1.0 / (2.0 * M_PI * delta * delta)
    cdef double reach = cutoff * delta
    cdef Py_ssize_t i, j, k, j0, j1, k0, k1
    cdef double d, t0, t1, t2, wv, s0, ax, ay, ar
    with nogil:
        for i in range(n):
            j0 = _lower(gxs, cx[i] - reach)
            j1 = _upper(gxs, cx[i] + reach)
            k0 = _lower(gys, cy[i] - reach)
            k1 = _upper(gys, cy[i] + reach)
            if j0 >= j1 or k0 >= k1:
                continue
            for j in range(j0, j1):
                d = gxs[j] - cx[i]
                ddx[j] = d
                fx[j] = exp(-d * d * inv)
            for k in range(k0, k1):
                d = gys[k] - cy[i]
                ddy[k] = d
                fy[k] = exp(-d * d * inv)
            s0 = 0.0
            ax = 0.0
            ay = 0.0
            ar = 0.0
            for j in range(j0, j1):
                t0 = 0.0
                t1 = 0.0
                t2 = 0.0
                for k in range(k0, k1):
                    wv = W[j, k] * fy[k]
                    t0 += wv
                    t1 += wv * ddy[k]
                    t2 += wv * ddy[k] * ddy[k]
                s0 += fx[j] * t0
                ax += fx[j] * ddx[j] * t0
                ay += fx[j] * t1
                ar += fx[j] * (ddx[j] * ddx[j] * t0 + t2)
            sx[i] = ax * norm / (delta * delta)
            sy[i] = ay * norm / (delta * delta)
            if with_delta:
                sd[i] = norm * (ar / (delta * delta * delta) - 2.0 * s0 / delta)
    return sx_arr, sy_arr, (sd_arr if with_delta else None)


def indicator_field(px, py, double delta, xs, ys):
    cdef const double[::1] cx = np.ascontiguousarray(px, dtype=np.float64)
    cdef const double[::1] cy = np.ascontiguousarray(py, dtype=np.float64)
    cdef const double[::1] gxs = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] gys = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = cx.shape[0], m1 = gxs.shape[0], m2 = gys.shape[0]
    out = np.zeros((m1, m2), dtype=np.float64)
    cdef double[:, ::1] A = out
    cdef double val = 1.0 / (M_PI * delta * delta)
    cdef double r2 = delta * delta
    cdef Py_ssize_t i, j, k, j0, j1, k0, k1
    cdef double dx, dy
    with nogil:
        for i in range(n):
            j0 = _lower(gxs, cx[i] - delta)
            j1 = _upper(gxs, cx[i] + delta)
            k0 = _lower(gys, cy[i] - delta)
            k1 = _upper(gys, cy[i] + delta)
            for j in range(j0, j1):
                dx = gxs[j] - cx[i]
                for k in range(k0, k1):
                    dy = gys[k] - cy[i]
                    if dx * dx + dy * dy <= r2:
                        A[j, k] += val
    return out
