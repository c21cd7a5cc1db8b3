"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures, same row order, same compensated summation. Used when the
extension is not built or when ``PROXAS_BACKEND=python`` is set.
"""
import math

import numpy as np


def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _dloss(z, y):
    s = _sigmoid(z)
    return -2.0 * y * (1.0 - y * s) * s * (1.0 - s)


def _kahan_add(out, comp, cols, vals):
    yk = vals - comp[cols]
    t = out[cols] + yk
    comp[cols] = (t - out[cols]) - yk
    out[cols] = t


def weighted_grad_sum(indptr, indices, data, labels, x, rows, coefs, out):
    comp = np.zeros(out.shape[0])
    out[:] = 0.0
    for k in range(rows.shape[0]):
        i = rows[k]
        lo, hi = indptr[i], indptr[i + 1]
        cols, vals = indices[lo:hi], data[lo:hi]
        dz = _dloss(float(vals @ x[cols]), labels[i]) * coefs[k]
        _kahan_add(out, comp, cols, dz * vals)
    return out


def weighted_grad_diff_sum(indptr, indices, data, labels, x, x_prev, rows, coefs, out):
    comp = np.zeros(out.shape[0])
    out[:] = 0.0
    for k in range(rows.shape[0]):
        i = rows[k]
        lo, hi = indptr[i], indptr[i + 1]
        cols, vals = indices[lo:hi], data[lo:hi]
        y = labels[i]
        dz = (_dloss(float(vals @ x[cols]), y) - _dloss(float(vals @ x_prev[cols]), y)) * coefs[k]
        _kahan_add(out, comp, cols, dz * vals)
    return out


def loss_sum(indptr, indices, data, labels, x):
    total = 0.0
    comp = 0.0
    for i in range(labels.shape[0]):
        lo, hi = indptr[i], indptr[i + 1]
        r = 1.0 - labels[i] * _sigmoid(float(data[lo:hi] @ x[indices[lo:hi]]))
        yk = r * r - comp
        t = total + yk
        comp = (t - total) - yk
        total = t
    return total
