"""Independent oracles for the closed-form pieces of the library.

None of these call the implementation they check: gradients are checked with
loss values only, pairwise probabilities by subset enumeration, estimator
statistics by Monte-Carlo over real draws.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .sampling import SamplingScheme, SchemeKind, draw

FD_STEP = 1e-6
FD_RTOL = 1e-6
MC_BATCHES = 20
ENUM_MAX_N = 12


def finite_diff_gradient(fn, x, h: float = FD_STEP) -> np.ndarray:
    """Central differences (fn(x + h e_j) - fn(x - h e_j)) / (2h)."""
    if not h > 0:
        raise ValueError("h must be > 0")
    x = np.array(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        xj = x[j]
        x[j] = xj + h
        fp = fn(x)
        x[j] = xj - h
        fm = fn(x)
        x[j] = xj
        g[j] = (fp - fm) / (2.0 * h)
    return g


@dataclass(frozen=True)
class MonteCarloStats:
    """Summary of repeated weighted estimates.

    ``mean_std_error`` is per component; ``std_error`` is the standard error
    of ``deviation_second_moment``. Both use batch means over 20 batches.
    """

    draws: int
    mean_estimate: np.ndarray
    deviation_second_moment: float
    std_error: float
    mean_std_error: np.ndarray
    target: np.ndarray


def monte_carlo_estimator(scheme: SamplingScheme, xi, draws: int, seed: int) -> MonteCarloStats:
    """Draw ``draws`` batches and summarise sum_{i in S} xi_i / (n p_i).

    The estimate is evaluated by direct summation here rather than via
    ``sampling.weighted_estimate``.
    """
    if draws < 1000:
        raise ValueError("need at least 1000 draws")
    xi = np.asarray(xi, dtype=float)
    n = scheme.n
    target = xi.mean(axis=0)
    coef = 1.0 / (n * np.asarray(scheme.p))
    rng = np.random.default_rng(seed)
    est = np.zeros((draws, xi.shape[1]))
    for r in range(draws):
        S = draw(scheme, rng)
        if S.size:
            est[r] = coef[S] @ xi[S]
    dev2 = np.sum((est - target) ** 2, axis=1)
    nb = MC_BATCHES
    size = draws // nb
    bm = est[: nb * size].reshape(nb, size, -1).mean(axis=1)
    bd = dev2[: nb * size].reshape(nb, size).mean(axis=1)
    return MonteCarloStats(
        draws=draws,
        mean_estimate=est.mean(axis=0),
        deviation_second_moment=float(dev2.mean()),
        std_error=float(bd.std(ddof=1) / math.sqrt(nb)),
        mean_std_error=bm.std(axis=0, ddof=1) / math.sqrt(nb),
        target=target,
    )


def monte_carlo_mean(sample_fn, draws: int, seed: int):
    """Mean and batch-means standard error of vectors returned by ``sample_fn(rng)``."""
    rng = np.random.default_rng(seed)
    vals = np.array([sample_fn(rng) for _ in range(draws)])
    nb = MC_BATCHES
    size = draws // nb
    bm = vals[: nb * size].reshape(nb, size, -1).mean(axis=1)
    return vals.mean(axis=0), bm.std(axis=0, ddof=1) / math.sqrt(nb)


def enumerate_pairwise(scheme: SamplingScheme) -> np.ndarray:
    """Pairwise inclusion probabilities by enumerating every possible batch."""
    n = scheme.n
    if n > ENUM_MAX_N:
        raise NotImplementedError(f"enumeration limited to n <= {ENUM_MAX_N}")
    P = np.zeros((n, n))
    if scheme.kind is SchemeKind.UNIFORM:
        b = int(scheme.b)
        subsets = list(itertools.combinations(range(n), b))
        for sub in subsets:
            idx = np.array(sub)
            P[np.ix_(idx, idx)] += 1.0
        return P / len(subsets)
    p = np.asarray(scheme.p)
    for mask in itertools.product((False, True), repeat=n):
        m = np.array(mask)
        prob = float(np.prod(np.where(m, p, 1.0 - p)))
        if prob == 0.0 or not m.any():
            continue
        idx = np.flatnonzero(m)
        P[np.ix_(idx, idx)] += prob
    return P


def brute_force_optimal_objective(weights, b, trials: int, seed: int) -> np.ndarray:
    """Objective sum w^2/p over random feasible p (0 < p <= 1, sum p = b)."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < trials:
        p = rng.dirichlet(np.ones(n)) * b
        # fold overflow above 1 back into the others until feasible
        for _ in range(100):
            over = p > 1
            if not over.any():
                break
            excess = float(np.sum(p[over] - 1.0))
            p[over] = 1.0
            free = ~over & (p < 1)
            p[free] += excess * p[free] / p[free].sum()
        if np.all(p > 0) and np.all(p <= 1 + 1e-12) and abs(p.sum() - b) < 1e-9:
            out.append(math.fsum(w * w / p))
    return np.array(out)
