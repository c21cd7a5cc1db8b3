"""Seeded synthetic classification data with controllable row-norm spread."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..problem import DatasetInstance


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of :func:`gen_synthetic`.

    A sparse weight vector ``w`` (``support`` fraction of nonzeros) is planted.
    Each row is ``t_i * w/||w|| + feature_noise * g_i / sqrt(d)`` with
    ``t_i ~ N(0, 1)`` and ``g_i ~ N(0, I)``, after which a ``sparsity``
    fraction of entries is zeroed and the row is rescaled to norm
    ``het ** (u_i**2)``, ``u_i ~ U(0, 1)``: norms span [1, het] with most rows
    near 1. Labels are ``sign(a_i . w)`` flipped with probability ``noise``.
    """

    n: int = 500
    d: int = 100
    sparsity: float = 0.0
    het: float = 10.0
    noise: float = 0.1
    seed: int = 0
    support: float = 0.1
    feature_noise: float = 0.3

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        for name in ("sparsity", "noise", "support"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.sparsity >= 1.0:
            raise ValueError("sparsity must be < 1")
        if self.het < 1.0:
            raise ValueError("het must be >= 1")
        if self.feature_noise < 0:
            raise ValueError("feature_noise must be >= 0")


def gen_synthetic(spec: SyntheticSpec) -> DatasetInstance:
    """Deterministic function of ``spec`` (including its seed)."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d
    k = max(1, int(round(spec.support * d)))
    w = np.zeros(d)
    w[rng.choice(d, size=k, replace=False)] = rng.standard_normal(k)
    direction = w / np.linalg.norm(w)
    t = rng.standard_normal(n)
    A = np.outer(t, direction) + spec.feature_noise * rng.standard_normal((n, d)) / math.sqrt(d)
    if spec.sparsity > 0:
        A *= rng.random((n, d)) >= spec.sparsity
    norms = spec.het ** (rng.random(n) ** 2)
    flips = rng.random(n) < spec.noise
    rn = np.linalg.norm(A, axis=1)
    empty = rn == 0
    if empty.any():
        # keep every row nonzero: one random unit coordinate
        A[empty, rng.integers(0, d, size=int(empty.sum()))] = 1.0
        rn = np.linalg.norm(A, axis=1)
    A *= (norms / rn)[:, None]
    y = np.where(A @ w >= 0, 1.0, -1.0)
    y[flips] *= -1.0
    mask = A != 0
    indptr = np.concatenate(([0], np.cumsum(mask.sum(axis=1))))
    indices = np.nonzero(mask)[1]
    return DatasetInstance(indptr, indices, A[mask], y, d)
