# cython: language_level=3
"""Compiled kernels for the sigmoid-squared finite-sum loss.

Rows are CSR arrays (``indptr``, ``indices``, ``data``). Every vector
accumulation uses per-coordinate compensated (Kahan) summation in row order,
so results are deterministic for a given row sequence.
"""
import numpy as np

from libc.math cimport exp


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline double _dloss(double z, double y) noexcept nogil:
    # d/dz (1 - y*sigmoid(z))**2
    cdef double s = _sigmoid(z)
    return -2.0 * y * (1.0 - y * s) * s * (1.0 - s)


cdef inline double _margin(const long[::1] indptr, const long[::1] indices,
                           const double[::1] data, const double[::1] x,
                           long i) noexcept nogil:
    cdef double z = 0.0
    cdef long q
    for q in range(indptr[i], indptr[i + 1]):
        z += data[q] * x[indices[q]]
    return z


cdef inline void _kahan_row(const long[::1] indptr, const long[::1] indices,
                            const double[::1] data, long i, double coef,
                            double[::1] out, double[::1] comp) noexcept nogil:
    cdef long q, j
    cdef double yk, t
    for q in range(indptr[i], indptr[i + 1]):
        j = indices[q]
        yk = coef * data[q] - comp[j]
        t = out[j] + yk
        comp[j] = (t - out[j]) - yk
        out[j] = t


def weighted_grad_sum(const long[::1] indptr, const long[::1] indices,
                      const double[::1] data, const double[::1] labels,
                      const double[::1] x, const long[::1] rows,
                      const double[::1] coefs, double[::1] out):
    """out <- sum_k coefs[k] * grad f_{rows[k]}(x)."""
    cdef Py_ssize_t k, nrows = rows.shape[0]
    cdef long i
    cdef double dz
    cdef double[::1] comp = np.zeros(out.shape[0])
    out[:] = 0.0
    with nogil:
        for k in range(nrows):
            i = rows[k]
            dz = _dloss(_margin(indptr, indices, data, x, i), labels[i]) * coefs[k]
            _kahan_row(indptr, indices, data, i, dz, out, comp)
    return np.asarray(out)


def weighted_grad_diff_sum(const long[::1] indptr, const long[::1] indices,
                           const double[::1] data, const double[::1] labels,
                           const double[::1] x, const double[::1] x_prev,
                           const long[::1] rows, const double[::1] coefs,
                           double[::1] out):
    """out <- sum_k coefs[k] * (grad f_{rows[k]}(x) - grad f_{rows[k]}(x_prev))."""
    cdef Py_ssize_t k, nrows = rows.shape[0]
    cdef long i
    cdef double y, dz
    cdef double[::1] comp = np.zeros(out.shape[0])
    out[:] = 0.0
    with nogil:
        for k in range(nrows):
            i = rows[k]
            y = labels[i]
            dz = (_dloss(_margin(indptr, indices, data, x, i), y)
                  - _dloss(_margin(indptr, indices, data, x_prev, i), y)) * coefs[k]
            _kahan_row(indptr, indices, data, i, dz, out, comp)
    return np.asarray(out)


def loss_sum(const long[::1] indptr, const long[::1] indices,
             const double[::1] data, const double[::1] labels,
             const double[::1] x):
    """Compensated sum over all rows of (1 - y_i sigmoid(a_i . x))**2."""
    cdef Py_ssize_t i, n = labels.shape[0]
    cdef double total = 0.0, comp = 0.0, r, yk, t
    with nogil:
        for i in range(n):
            r = 1.0 - labels[i] * _sigmoid(_margin(indptr, indices, data, x, i))
            yk = r * r - comp
            t = total + yk
            comp = (t - total) - yk
            total = t
    return total
