"""Finite-sum sigmoid-squared loss.

    f(x) = (1/n) * sum_i (1 - y_i * sigmoid(a_i . x))**2

Rows ``a_i`` are sparse and stored in CSR form; iterates ``x`` are dense.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

# Curvature constants of h_y(z) = (1 - y*sigmoid(z))**2 over y in {-1, +1}.
# GRAD_CONST = max_z |h_y'(z)|, attained for y = -1 at sigmoid(z) = 1/sqrt(3),
# where it equals 4 / (3*sqrt(3)).
# SMOOTH_CONST = max_z |h_y''(z)|, attained for y = -1 near z = -0.94702;
# obtained by bounded 1-D maximization and rounded up in the 12th digit.
# ``tests/test_problem.py`` re-derives both on a dense grid.
GRAD_CONST = 0.7698003589195010
SMOOTH_CONST = 0.3083684825730


@dataclass(frozen=True, eq=False)
class DatasetInstance:
    """Binary-labelled sparse design matrix.

    Parameters
    ----------
    indptr, indices, data
        CSR arrays. Column indices inside each row are strictly increasing.
    labels
        Array of -1.0 / +1.0.
    d
        Feature dimension.
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    labels: np.ndarray
    d: int

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        n = labels.shape[0]
        if n < 1 or self.d < 1:
            raise ValueError("dataset needs n >= 1 and d >= 1")
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != indices.shape[0]:
            raise ValueError("malformed CSR indptr")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("malformed CSR indptr")
        if indices.shape != data.shape:
            raise ValueError("indices and data differ in length")
        if indices.size and (indices.min() < 0 or indices.max() >= self.d):
            raise ValueError(f"feature index outside [0, {self.d})")
        if not np.all((labels == 1.0) | (labels == -1.0)):
            raise ValueError("labels must be -1 or +1")
        if indices.size > 1:
            bad = np.diff(indices) <= 0
            starts = indptr[1:-1]
            bad[starts[(starts > 0) & (starts < indices.size)] - 1] = False
            if bad.any():
                row = int(np.searchsorted(indptr, np.flatnonzero(bad)[0] + 1, side="right")) - 1
                raise ValueError(f"row {row}: indices must be strictly increasing")
        for name, arr in (("indptr", indptr), ("indices", indices), ("data", data), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "d", int(self.d))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_rows(cls, rows, labels, d=None) -> "DatasetInstance":
        """Build from a list of ``{index: value}`` dicts (or ``(index, value)`` lists)."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for row in rows:
            items = sorted(dict(row).items())
            indices.extend(j for j, _ in items)
            data.extend(v for _, v in items)
            indptr.append(len(indices))
        if d is None:
            d = max(indices) + 1 if indices else 1
        return cls(np.array(indptr), np.array(indices, dtype=np.int64), np.array(data, dtype=float),
                   np.array(labels, dtype=float), d)

    @classmethod
    def from_dense(cls, A, labels) -> "DatasetInstance":
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise ValueError("dense design must be 2-D")
        rows = [{j: A[i, j] for j in np.flatnonzero(A[i])} for i in range(A.shape[0])]
        return cls.from_rows(rows, labels, d=A.shape[1])

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.d))
        for i in range(self.n):
            cols, vals = self.row(i)
            A[i, cols] = vals
        return A

    def row_norms(self) -> np.ndarray:
        row_ids = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return np.sqrt(np.bincount(row_ids, weights=self.data ** 2, minlength=self.n))

    def same_as(self, other: "DatasetInstance") -> bool:
        return (self.d == other.d
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.data, other.data)
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class LossConstants:
    """Per-example gradient bounds ``G`` and smoothness constants ``L``."""

    G: np.ndarray
    L: np.ndarray
    L_tilde: float
    cG: float = GRAD_CONST
    cL: float = SMOOTH_CONST


def sigmoid(z):
    """Logistic function, overflow-free for any finite ``z``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def _check_x(data: DatasetInstance, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (data.d,):
        raise ValueError(f"x has shape {x.shape}, expected ({data.d},)")
    return x


def _check_index(data: DatasetInstance, i) -> int:
    i = int(i)
    if not 0 <= i < data.n:
        raise IndexError(f"example index {i} outside [0, {data.n})")
    return i


def loss_single(data: DatasetInstance, i, x) -> float:
    """(1 - y_i sigmoid(a_i . x))**2."""
    x = _check_x(data, x)
    i = _check_index(data, i)
    cols, vals = data.row(i)
    r = 1.0 - data.labels[i] * sigmoid(float(vals @ x[cols]))
    return r * r


def grad_single(data: DatasetInstance, i, x) -> np.ndarray:
    """Gradient of example ``i``; only the nonzero coordinates of ``a_i`` are touched."""
    x = _check_x(data, x)
    i = _check_index(data, i)
    cols, vals = data.row(i)
    y = data.labels[i]
    s = sigmoid(float(vals @ x[cols]))
    g = np.zeros(data.d)
    g[cols] = -2.0 * y * (1.0 - y * s) * s * (1.0 - s) * vals
    return g


def loss_value(data: DatasetInstance, x) -> float:
    """f(x), the mean loss."""
    x = _check_x(data, x)
    return kernels.loss_sum(data.indptr, data.indices, data.data, data.labels, x) / data.n


def grad_full(data: DatasetInstance, x) -> np.ndarray:
    """Exact mean gradient (costs n IFO)."""
    x = _check_x(data, x)
    return _weighted_grad(data, np.arange(data.n, dtype=np.int64), np.ones(data.n), x)


def weighted_grad(data: DatasetInstance, rows, inv_p, x) -> np.ndarray:
    """(1/n) * sum_k inv_p[k] * grad f_{rows[k]}(x).

    ``inv_p`` holds 1/p_i for each drawn row, so this is the importance-weighted
    minibatch estimator. Costs ``len(rows)`` IFO.
    """
    return _weighted_grad(data, rows, inv_p, _check_x(data, x))


def _weighted_grad(data, rows, inv_p, x):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    inv_p = np.ascontiguousarray(inv_p, dtype=np.float64)
    out = np.empty(data.d)
    kernels.weighted_grad_sum(data.indptr, data.indices, data.data, data.labels, x, rows, inv_p, out)
    out /= data.n
    return out


def weighted_grad_diff(data: DatasetInstance, rows, inv_p, x, x_prev) -> np.ndarray:
    """(1/n) * sum_k inv_p[k] * (grad f_i(x) - grad f_i(x_prev)), i = rows[k].

    Both gradients of a row are multiples of ``a_i``, so one pass suffices.
    Counted as ``len(rows)`` IFO by the optimizers.
    """
    x = _check_x(data, x)
    x_prev = _check_x(data, x_prev)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    inv_p = np.ascontiguousarray(inv_p, dtype=np.float64)
    out = np.empty(data.d)
    kernels.weighted_grad_diff_sum(data.indptr, data.indices, data.data, data.labels,
                                   x, x_prev, rows, inv_p, out)
    out /= data.n
    return out


def loss_constants(data: DatasetInstance) -> LossConstants:
    norms = data.row_norms()
    G = GRAD_CONST * norms
    L = SMOOTH_CONST * norms ** 2
    return LossConstants(G=G, L=L, L_tilde=math.fsum(L) / data.n)
