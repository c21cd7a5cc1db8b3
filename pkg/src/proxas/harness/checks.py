"""Self-check suite behind ``proxas verify``.

Each check compares a library routine with an independent oracle from
:mod:`proxas.verification` (or a direct formula) at a scale that keeps the
whole suite to a few seconds. Failures are reported, never raised.
"""
from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import problem, regularizers, sampling, verification
from ..optimizers import (Method, OptimizerConfig, default_stepsize, prox_sarah_as, prox_spider_as,
                          q_constant)
from ..regularizers import RegKind, Regularizer
from .synthetic import SyntheticSpec, gen_synthetic


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _dataset(rng, n=30, d=10):
    A = rng.standard_normal((n, d)) * (rng.random((n, d)) < 0.6)
    A *= (1.0 + 4.0 * rng.random(n))[:, None] / np.sqrt(d)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return problem.DatasetInstance.from_dense(A, y)


def check_gradient(rng, probes=200):
    data = _dataset(rng)
    worst = 0.0
    for _ in range(probes):
        i = int(rng.integers(data.n))
        x = rng.standard_normal(data.d)
        g = problem.grad_single(data, i, x)
        fd = verification.finite_diff_gradient(lambda z: problem.loss_single(data, i, z), x)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g))))
    return worst <= verification.FD_RTOL, f"max rel err {worst:.2e}"


def check_grad_full(rng):
    data = _dataset(rng, n=50)
    x = rng.standard_normal(data.d)
    ref = sum(problem.grad_single(data, i, x) for i in range(data.n)) / data.n
    err = float(np.max(np.abs(problem.grad_full(data, x) - ref)))
    return err <= 1e-12, f"max abs err {err:.1e}"


def check_bounds(rng, probes=20000):
    data = _dataset(rng)
    c = problem.loss_constants(data)
    g_bad = l_bad = 0
    for _ in range(probes):
        i = int(rng.integers(data.n))
        x1 = rng.standard_normal(data.d) * rng.choice([0.3, 3.0])
        x2 = x1 + rng.standard_normal(data.d) * rng.choice([0.01, 1.0])
        g1 = problem.grad_single(data, i, x1)
        g2 = problem.grad_single(data, i, x2)
        g_bad += np.linalg.norm(g1) > c.G[i] * (1 + 1e-12)
        l_bad += np.linalg.norm(g1 - g2) > c.L[i] * np.linalg.norm(x1 - x2) * (1 + 1e-12)
    return g_bad == 0 and l_bad == 0, f"G violations {g_bad}, L violations {l_bad}"


def check_prox(rng, prox_fn, per_kind=200):
    worst = -math.inf
    for kind in RegKind:
        for _ in range(per_kind):
            v = float(rng.normal(scale=3.0))
            tau = float(rng.exponential(1.0))
            y = float(prox_fn(Regularizer(kind, tau), np.array([v]), 1.0)[0])
            y_star = regularizers.prox_oracle_1d(kind, tau, v)
            gap = float(regularizers.prox_objective(kind, tau, v, y)
                        - regularizers.prox_objective(kind, tau, v, y_star))
            worst = max(worst, gap)
    return worst <= 1e-6, f"max excess objective {worst:.2e}"


def check_l0_threshold(rng, prox_fn, probes=200):
    bad = 0
    for _ in range(probes):
        eta, lam = float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.1, 2.0))
        t = math.sqrt(2 * eta * lam)
        v = np.array([t + 1e-9, -(t + 1e-9), t - 1e-9, -(t - 1e-9)])
        y = prox_fn(Regularizer(RegKind.L0, lam), v, eta)
        bad += not (y[0] == v[0] and y[1] == v[1] and y[2] == 0 and y[3] == 0)
    return bad == 0, f"{bad} of {probes} threshold probes wrong"


def check_pairwise(rng):
    worst = 0.0
    for n in range(2, 9):
        for b in range(1, n + 1):
            w = rng.uniform(0.1, 5.0, n)
            for s in (sampling.make_uniform(n, b), sampling.make_independent_optimal(w, b)):
                diff = np.max(np.abs(sampling.pairwise_matrix(s) - verification.enumerate_pairwise(s)))
                worst = max(worst, float(diff))
    return worst <= 1e-12, f"max |P - enumeration| {worst:.1e}"


def check_psd(rng):
    worst = math.inf
    for n in range(2, 17):
        for b in range(1, n + 1):
            w = rng.uniform(0.1, 5.0, n)
            for s in (sampling.make_uniform(n, b), sampling.make_independent_optimal(w, b)):
                worst = min(worst, sampling.pv_gap_min_eig(s))
    return worst >= -1e-10, f"min eigenvalue {worst:.2e}"


def check_optimal_probabilities(rng, trials=200):
    ok = np.allclose(sampling.make_independent_optimal([1, 1, 1, 1], 2).p, 0.5, rtol=0, atol=1e-12)
    ok &= np.allclose(sampling.make_independent_optimal([1, 2, 3, 4], 2).p, [0.2, 0.4, 0.6, 0.8],
                      rtol=0, atol=1e-12)
    ok &= np.allclose(sampling.make_independent_optimal([1, 1, 1, 10], 2).p, [1 / 3, 1 / 3, 1 / 3, 1],
                      rtol=0, atol=1e-12)
    w = rng.uniform(0.1, 10.0, 12)
    s = sampling.make_independent_optimal(w, 5)
    kkt = math.fsum(w * w / s.p)
    rand = verification.brute_force_optimal_objective(w, 5, trials, int(rng.integers(1 << 31)))
    beaten = int(np.sum(rand < kkt - 1e-9))
    ok &= beaten == 0 and abs(s.p.sum() - 5) <= 1e-9
    return bool(ok), f"worked examples + {trials} random feasible p, {beaten} beat KKT"


def check_cauchy(rng):
    ratios = [sampling.cauchy_ratio(rng.uniform(0.01, 10.0, int(rng.integers(2, 50)))) for _ in range(100)]
    eq = sampling.cauchy_ratio(np.full(7, 2.5))
    return min(ratios) >= 1.0 and abs(eq - 1.0) <= 1e-12, f"min ratio {min(ratios):.4f}, equal-weight {eq!r}"


def check_estimator(rng, draws=20000):
    xi = rng.standard_normal((16, 4))
    w = rng.uniform(0.2, 5.0, 16)
    worst_z, worst_var = 0.0, -math.inf
    for s in (sampling.make_uniform(16, 4), sampling.make_independent_optimal(w, 4)):
        st = verification.monte_carlo_estimator(s, xi, draws, int(rng.integers(1 << 31)))
        z = np.abs(st.mean_estimate - st.target) / st.mean_std_error
        worst_z = max(worst_z, float(z.max()))
        bound = sampling.variance_bound(s, np.sum(xi * xi, axis=1))
        worst_var = max(worst_var, st.deviation_second_moment - (1.02 * bound + 3 * st.std_error))
    return worst_z <= 3.0 and worst_var <= 0, f"max |z| {worst_z:.2f}, variance slack {-worst_var:.3g}"


def _small_problem():
    return gen_synthetic(SyntheticSpec(n=60, d=20, seed=3))


def check_sarah_exact(rng):
    data = _small_problem()
    full = sampling.make_uniform(data.n, data.n)
    reg = Regularizer(RegKind.LHALF, 0.01)
    c = problem.loss_constants(data)
    cfg = OptimizerConfig(Method.SARAH, default_stepsize(Method.SARAH, c.L_tilde, 25, 0.0), 2, full,
                          m=25, seed=1, x0=0.1 * rng.standard_normal(data.d))
    dev = []

    def hook(step):
        if step["S"] is not None:
            dev.append(np.linalg.norm(step["g"] - problem.grad_full(data, step["x"])))

    prox_sarah_as(data, reg, cfg, on_step=hook)
    worst = max(dev)
    return worst <= 1e-12, f"max ||V_t - grad f(x_t)|| {worst:.1e} over {len(dev)} steps"


def check_spider_reduction(rng):
    data = _small_problem()
    inner = sampling.make_uniform(data.n, 8)
    full = sampling.make_uniform(data.n, data.n)
    reg = Regularizer(RegKind.LHALF, 0.01)
    x0 = 0.1 * rng.standard_normal(data.d)
    base = dict(eta=0.05, epochs=4, inner_scheme=inner, m=8, seed=11, x0=x0)
    a = prox_sarah_as(data, reg, OptimizerConfig(Method.SARAH, **base))
    b = prox_spider_as(data, reg, OptimizerConfig(Method.SPIDER, outer_scheme=full, **base))
    same = (np.array_equal(a.x, b.x)
            and [(r.step, r.ifo, r.objective, r.residual, r.nnz) for r in a.trace]
            == [(r.step, r.ifo, r.objective, r.residual, r.nnz) for r in b.trace])
    return same, "bit-identical" if same else "traces differ"


def check_stepsize(rng):
    n = 20
    L = rng.uniform(0.1, 3.0, n)
    s = sampling.make_independent_optimal(L, 5)
    direct = sum(float(s.v[i]) * L[i] ** 2 / (float(s.p[i]) * n * n) for i in range(n))
    Q = q_constant(s, L)
    Lt = float(np.mean(L))
    eta = default_stepsize(Method.SARAH, Lt, 7, Q)
    lhs, rhs = 0.5 / eta, 2 * Lt + 7 * Q / Lt
    ok = abs(Q - direct) <= 1e-12 and abs(lhs - rhs) <= 2 * math.ulp(rhs)
    return ok, f"|Q - direct| {abs(Q - direct):.1e}, identity gap {abs(lhs - rhs):.1e}"


def run_checks(prox_fn: Optional[Callable] = None, seed: int = 0) -> list[CheckResult]:
    """Run every check. ``prox_fn(reg, v, eta)`` replaces the prox under test."""
    prox_fn = regularizers.prox if prox_fn is None else prox_fn
    suite = [
        ("gradient vs finite differences", lambda r: check_gradient(r)),
        ("full gradient vs per-example sum", lambda r: check_grad_full(r)),
        ("G_i / L_i bounds", lambda r: check_bounds(r)),
        ("prox vs grid oracle", lambda r: check_prox(r, prox_fn)),
        ("L0 threshold probes", lambda r: check_l0_threshold(r, prox_fn)),
        ("pairwise matrix vs enumeration", lambda r: check_pairwise(r)),
        ("P - pp^T <= Diag(p v)", lambda r: check_psd(r)),
        ("optimal independent probabilities", lambda r: check_optimal_probabilities(r)),
        ("Cauchy-Schwarz ratio", lambda r: check_cauchy(r)),
        ("estimator mean and variance bound", lambda r: check_estimator(r)),
        ("full-batch SARAH exactness", lambda r: check_sarah_exact(r)),
        ("SPIDER with full outer batch", lambda r: check_spider_reduction(r)),
        ("Q and step-size identity", lambda r: check_stepsize(r)),
    ]
    results = []
    for k, (name, fn) in enumerate(suite):
        rng = np.random.default_rng([seed, k])
        t0 = time.perf_counter()
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # reported, not raised
            passed, detail = False, f"error: {exc!r}"
            traceback.print_exc()
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:5.1f}s  {r.detail}")
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return "\n".join(lines)
