"""Proper minibatch sampling schemes and the importance-weighted estimator.

A scheme is summarised by its inclusion probabilities ``p_i = Prob(i in S)``
and a vector ``v`` with ``P - p p^T <= Diag(p * v)`` (Loewner order), where
``P_ij = Prob({i, j} subset S)``. For such a pair the estimator
``sum_{i in S} xi_i / (n p_i)`` is unbiased for the mean of the ``xi_i`` and
its variance is at most ``(1/n^2) sum_i v_i ||xi_i||^2 / p_i``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

PAIRWISE_MAX_N = 64
P_FLOOR = 1e-12


class SchemeKind(str, enum.Enum):
    UNIFORM = "uniform"
    INDEPENDENT = "independent"


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    """Immutable description of a proper sampling over ``range(n)``.

    ``b`` is the exact batch size for uniform sampling and the expected batch
    size ``sum(p)`` for independent sampling. ``k`` counts indices with
    ``p_i < 1``.
    """

    kind: SchemeKind
    n: int
    b: float
    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        v = np.array(self.v, dtype=float)
        if p.shape != (self.n,) or v.shape != (self.n,):
            raise ValueError("p and v must have length n")
        if not np.all(p > 0):
            raise ValueError("sampling is not proper: some p_i <= 0")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        inv_p = 1.0 / p
        inv_p.setflags(write=False)
        object.__setattr__(self, "inv_p", inv_p)

    @property
    def k(self) -> int:
        return int(np.count_nonzero(self.p < 1.0))

    @property
    def is_full(self) -> bool:
        """Every draw is the whole index set."""
        return bool(np.all(self.p == 1.0))

    def with_v(self, v) -> "SamplingScheme":
        return SamplingScheme(self.kind, self.n, self.b, self.p, v)


def make_uniform(n: int, b: int) -> SamplingScheme:
    """Fixed-size batches of ``b`` distinct indices, all subsets equally likely."""
    n, b = int(n), int(b)
    if n < 2:
        raise ValueError("uniform sampling needs n >= 2")
    if not 1 <= b <= n:
        raise ValueError(f"batch size {b} outside [1, {n}]")
    p = np.full(n, b / n)
    if b == n:
        p[:] = 1.0
    v = np.full(n, (n - b) / (n - 1))
    return SamplingScheme(SchemeKind.UNIFORM, n, b, p, v)


def make_independent(p) -> SamplingScheme:
    """Independent sampling with given inclusion probabilities, ``v = 1 - p``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("independent sampling needs 0 < p_i <= 1")
    return SamplingScheme(SchemeKind.INDEPENDENT, p.shape[0], float(math.fsum(p)), p, 1.0 - p)


def optimal_probabilities(weights, b) -> tuple[np.ndarray, int]:
    """Minimise sum_i w_i^2 / p_i subject to sum p = b, 0 < p_i <= 1.

    Returns ``(p, k)`` with ``p`` in the caller's index order. With the weights
    sorted ascending, ``k`` is the largest index with
    ``0 < b + k - n <= sum_{j<=k} w_j / w_k``; the ``k`` smallest weights get
    ``p_i = (b + k - n) w_i / sum_{j<=k} w_j`` and the rest get 1.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    b = float(b)
    if n < 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if not 0 < b <= n:
        raise ValueError(f"expected batch size {b} outside (0, {n}]")
    order = np.argsort(w, kind="stable")
    ws = w[order]
    csum = np.cumsum(ws)
    k = 0
    for kk in range(n, 0, -1):
        slack = b + kk - n
        if slack <= 0:
            break
        wk = ws[kk - 1]
        if wk > 0 and slack <= csum[kk - 1] / wk:
            k = kk
            break
    if k == 0:
        raise ValueError("no feasible split for optimal probabilities "
                         "(too few positive weights for this batch size)")
    ps = np.ones(n)
    ps[:k] = (b + k - n) * ws[:k] / csum[k - 1]
    np.clip(ps, P_FLOOR, 1.0, out=ps)
    p = np.empty(n)
    p[order] = ps
    return p, k


def make_independent_optimal(weights, b) -> SamplingScheme:
    """Independent sampling with variance-optimal probabilities for ``weights``."""
    p, _ = optimal_probabilities(weights, b)
    return SamplingScheme(SchemeKind.INDEPENDENT, p.shape[0], float(b), p, 1.0 - p)


def pairwise_matrix(scheme: SamplingScheme) -> np.ndarray:
    """Dense matrix of pairwise inclusion probabilities (small n only)."""
    n = scheme.n
    if n > PAIRWISE_MAX_N:
        raise NotImplementedError(f"pairwise matrix limited to n <= {PAIRWISE_MAX_N}")
    p = scheme.p
    if scheme.kind is SchemeKind.UNIFORM:
        b = scheme.b
        P = np.full((n, n), b * (b - 1) / (n * (n - 1)))
    else:
        P = np.outer(p, p)
    np.fill_diagonal(P, p)
    return P


def pv_gap_min_eig(scheme: SamplingScheme) -> float:
    """Smallest eigenvalue of Diag(p*v) - (P - p p^T)."""
    P = pairwise_matrix(scheme)
    p = scheme.p
    M = np.diag(p * scheme.v) - (P - np.outer(p, p))
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def check_pv_inequality(scheme: SamplingScheme, tol: float = 1e-10) -> bool:
    """True iff P - p p^T <= Diag(p * v) up to ``tol`` on the smallest eigenvalue."""
    return pv_gap_min_eig(scheme) >= -tol


def draw(scheme: SamplingScheme, rng: np.random.Generator) -> np.ndarray:
    """One random index set, returned sorted ascending.

    A full scheme (all p_i = 1) returns ``arange(n)`` without touching ``rng``.
    Independent draws may be empty.
    """
    n = scheme.n
    if scheme.is_full:
        return np.arange(n, dtype=np.int64)
    if scheme.kind is SchemeKind.UNIFORM:
        S = rng.choice(n, size=int(scheme.b), replace=False)
    else:
        S = np.flatnonzero(rng.random(n) < scheme.p)
    S = np.sort(S).astype(np.int64, copy=False)
    return S


def weighted_estimate(S, scheme: SamplingScheme, xi) -> np.ndarray:
    """sum_{i in S} xi_i / (n p_i); ``xi`` has one row per index."""
    xi = np.asarray(xi, dtype=float)
    S = np.asarray(S, dtype=np.int64)
    if S.size == 0:
        return np.zeros(xi.shape[1:])
    return (scheme.inv_p[S] / scheme.n) @ xi[S]


def variance_bound(scheme: SamplingScheme, sq_norms) -> float:
    """(1/n^2) sum_i v_i ||xi_i||^2 / p_i."""
    sq = np.asarray(sq_norms, dtype=float)
    return math.fsum(scheme.v * sq / scheme.p) / scheme.n ** 2


def cauchy_ratio(weights) -> float:
    """n sum w^2 / (sum w)^2, always >= 1."""
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    return w.shape[0] * math.fsum(w * w) / math.fsum(w) ** 2


def uniform_bound_term(weights, b) -> float:
    """(1/b)(1/n)((n-b)/(n-1)) sum w^2, the uniform-sampling variance term."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    return (n - b) / (b * n * (n - 1)) * math.fsum(w * w)


def independent_bound_term(weights, b) -> float:
    """(1/n^2) sum (1 - p_i) w_i^2 / p_i at the optimal independent probabilities."""
    scheme = make_independent_optimal(weights, b)
    return variance_bound(scheme, np.asarray(weights, dtype=float) ** 2)


def independent_corollary_term(weights, b) -> float:
    """(1/n^2) (sum_{i<=k} w_i)^2 / (b + k - n), the looser closed form of
    :func:`independent_bound_term` that drops the ``-sum w_i^2`` part."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    p, k = optimal_probabilities(w, b)
    head = math.fsum(np.sort(w)[:k])
    return head * head / ((b + k - n) * n * n)
