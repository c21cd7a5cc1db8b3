"""Proximal stochastic methods with arbitrary sampling.

* ``prox_sgd_as``    minibatch proximal SGD with importance weights
* ``prox_sarah_as``  SARAH recursion restarted from a full gradient each epoch
* ``prox_spider_as`` same recursion restarted from a sampled batch gradient

Cost is counted in IFO calls (one per-example gradient). The stationarity
residual reported at checkpoints is the norm of
``grad f(x_{t+1}) - g_t - (x_{t+1} - x_t) / eta``, an element of the Frechet
subdifferential of F at x_{t+1}; computing it needs an exact full gradient,
which is not charged to the IFO counter.
"""
from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import problem as _problem
from .problem import DatasetInstance, grad_full, loss_value
from .regularizers import Regularizer, prox
from .sampling import SamplingScheme, draw

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    SGD = "sgd"
    SARAH = "sarah"
    SPIDER = "spider"


class OutputRule(str, enum.Enum):
    LAST = "last"
    RANDOM = "random"


@dataclass(frozen=True)
class OptimizerConfig:
    """Run parameters.

    ``epochs`` is the iteration count T for SGD and the number of outer loops
    for the variance-reduced methods. ``stride`` controls trace checkpoints
    (every ``stride`` steps plus the last one) after a step-0 row for the
    initial point; ``stride <= 0`` records only that row. A run with no steps
    has an empty trace. ``max_ifo`` stops a run after the step that reaches it.
    """

    method: Method
    eta: float
    epochs: int
    inner_scheme: SamplingScheme
    outer_scheme: Optional[SamplingScheme] = None
    m: int = 1
    seed: int = 0
    output_rule: OutputRule = OutputRule.LAST
    stride: int = 1
    x0: Optional[np.ndarray] = field(default=None, compare=False)
    max_ifo: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "output_rule", OutputRule(self.output_rule))
        if not (self.eta > 0):
            raise ValueError(f"step size must be > 0, got {self.eta}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.m < 0:
            raise ValueError("inner loop length must be >= 0")
        if self.method is Method.SPIDER:
            if self.outer_scheme is None:
                raise ValueError("SPIDER needs an outer sampling scheme")
            if self.outer_scheme.n != self.inner_scheme.n:
                raise ValueError("inner and outer schemes disagree on n")

    @property
    def b(self) -> float:
        return self.inner_scheme.b

    @property
    def B(self) -> Optional[float]:
        return None if self.outer_scheme is None else self.outer_scheme.b


@dataclass(frozen=True)
class TraceRecord:
    step: int
    ifo: int
    objective: float
    residual: float
    nnz: int
    elapsed: float


@dataclass
class RunReport:
    x: np.ndarray
    selected: tuple[int, int]
    trace: list[TraceRecord]
    config: OptimizerConfig
    ifo: int
    final_objective: float
    x_last: np.ndarray


def stationarity_residual(grad_next, g_used, x_next, x_cur, eta) -> float:
    """||grad f(x_next) - g_used - (x_next - x_cur)/eta||_2."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    grad_next, g_used, x_next, x_cur = (np.asarray(a, dtype=float) for a in (grad_next, g_used, x_next, x_cur))
    if not (grad_next.shape == g_used.shape == x_next.shape == x_cur.shape):
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(grad_next - g_used - (x_next - x_cur) / eta))


def q_constant(scheme: SamplingScheme, L) -> float:
    """sum_i v_i L_i^2 / (p_i n^2)."""
    L = np.asarray(L, dtype=float)
    return math.fsum(scheme.v * L * L / scheme.p) / scheme.n ** 2


def q_prime_constant(outer_scheme: SamplingScheme, G) -> float:
    """sum_i v'_i G_i^2 / (p'_i n^2); the bias floor of the sampled restart."""
    return q_constant(outer_scheme, G)


def default_stepsize(method, L_tilde: float, m: int = 0, Q: float = 0.0) -> float:
    """Step size the convergence analysis prescribes.

    SGD: 1/(4 L~), inside the admissible range (0, 1/(2 L~)).
    SARAH/SPIDER: 1/(4 L~ + 2 m Q / L~), i.e. 1/(2 eta) = 2 L~ + m Q / L~.
    """
    if not L_tilde > 0:
        raise ValueError("L_tilde must be > 0")
    if Method(method) is Method.SGD:
        return 1.0 / (4.0 * L_tilde)
    return 1.0 / (4.0 * L_tilde + 2.0 * m * Q / L_tilde)


def sgd_constants(L_tilde: float, eta: float) -> tuple[float, float]:
    """(C1, C2) of the ProxSGD bound E dist^2 <= C1/T sum Var + C2/T Delta."""
    Le = L_tilde * eta
    C1 = (1 + 4 * Le - 2 * Le ** 2) / (Le - 2 * Le ** 2)
    C2 = (2 + 4 * Le + 4 * Le ** 2) / (eta - 2 * L_tilde * eta ** 2)
    return C1, C2


def _clamp_batch(b: float, n: int, what: str) -> float:
    if b > n:
        log.warning("%s = %.4g exceeds n = %d; clamped to n", what, b, n)
        return float(n)
    return b


def sgd_batch_size(G, C1: float, eps: float, independent: bool) -> float:
    """Batch size that makes the ProxSGD variance term at most eps^2 / 2."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if independent:
        b = 2.0 * math.fsum(G) ** 2 * C1 / (n * n * eps * eps)
    else:
        b = 2.0 * math.fsum(G * G) * C1 / (n * eps * eps)
    return _clamp_batch(b, n, "batch size")


def spider_outer_batch_size(G, eps: float, independent: bool) -> float:
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if independent:
        B = 2.0 * math.fsum(G) ** 2 / (n * n * eps * eps)
    else:
        B = 2.0 * math.fsum(G * G) / (n * eps * eps)
    return _clamp_batch(B, n, "outer batch size")


class _Recorder:
    def __init__(self, data, reg, stride, eta):
        self.data = data
        self.reg = reg
        self.stride = stride
        self.eta = eta
        self.trace: list[TraceRecord] = []
        self.t0 = time.perf_counter()

    def objective(self, x):
        return loss_value(self.data, x) + self.reg.value(x)

    def initial(self, x):
        self.trace.append(TraceRecord(0, 0, self.objective(x), math.nan,
                                      int(np.count_nonzero(x)), time.perf_counter() - self.t0))

    def due(self, step, last):
        return self.stride > 0 and (last or step % self.stride == 0)

    def record(self, step, ifo, x_next, g_used, x_cur):
        res = stationarity_residual(grad_full(self.data, x_next), g_used, x_next, x_cur, self.eta)
        self.trace.append(TraceRecord(step, ifo, self.objective(x_next), res,
                                      int(np.count_nonzero(x_next)), time.perf_counter() - self.t0))


def _streams(seed: int):
    inner, outer, out = np.random.SeedSequence(int(seed)).spawn(3)
    return (np.random.Generator(np.random.PCG64(inner)),
            np.random.Generator(np.random.PCG64(outer)),
            np.random.Generator(np.random.PCG64(out)))


def _initial(data, config):
    if config.x0 is None:
        return np.zeros(data.d)
    x0 = np.array(config.x0, dtype=float)
    if x0.shape != (data.d,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({data.d},)")
    return x0


def _check(data, config, method):
    if config.method is not method:
        raise ValueError(f"config is for {config.method.value}, not {method.value}")
    if config.inner_scheme.n != data.n:
        raise ValueError("sampling scheme size does not match the dataset")


def prox_sgd_as(data: DatasetInstance, reg: Regularizer, config: OptimizerConfig,
                on_step: Optional[Callable[[dict], None]] = None) -> RunReport:
    """Minibatch proximal SGD with arbitrary sampling.

    x_{t+1} = prox_{eta r}(x_t - eta g_t), g_t = sum_{i in S_t} grad f_i(x_t) / (n p_i).
    With ``OutputRule.RANDOM`` the returned point is x_R, R uniform on 1..T.
    """
    _check(data, config, Method.SGD)
    eta, T, scheme = config.eta, config.epochs, config.inner_scheme
    rng, _, rng_out = _streams(config.seed)
    x = _initial(data, config)
    rec = _Recorder(data, reg, config.stride, eta)
    if T > 0:
        rec.initial(x)
    pick = int(rng_out.integers(1, T + 1)) if T > 0 else 0
    selected_x, selected = x.copy(), (0, 0)
    ifo = 0
    for t in range(1, T + 1):
        if t == pick:
            selected_x, selected = x.copy(), (1, t)
        S = draw(scheme, rng)
        g = _problem.weighted_grad(data, S, scheme.inv_p[S], x)
        ifo += S.size
        x_next = prox(reg, x - eta * g, eta)
        stop = config.max_ifo is not None and ifo >= config.max_ifo
        if on_step is not None:
            on_step({"epoch": 1, "t": t, "x": x, "g": g, "x_next": x_next, "S": S})
        if rec.due(t, t == T or stop):
            rec.record(t, ifo, x_next, g, x)
        x = x_next
        if stop:
            break
    return _report(data, reg, config, rec, x, selected_x, selected, ifo)


def _report(data, reg, config, rec, x_last, selected_x, selected, ifo):
    if config.output_rule is OutputRule.LAST or selected == (0, 0):
        x_out = x_last
        selected = (-1, -1) if config.output_rule is OutputRule.LAST else selected
    else:
        x_out = selected_x
    return RunReport(x=x_out, selected=selected, trace=rec.trace, config=config, ifo=int(ifo),
                     final_objective=rec.objective(x_last), x_last=x_last)


def _variance_reduced(data, reg, config, method, on_step):
    _check(data, config, method)
    eta, J, m = config.eta, config.epochs, config.m
    inner = config.inner_scheme
    outer = config.outer_scheme
    rng_in, rng_outer, rng_out = _streams(config.seed)
    x_tilde = _initial(data, config)
    rec = _Recorder(data, reg, config.stride, eta)
    if J > 0:
        rec.initial(x_tilde)
    n_candidates = J * m
    pick = int(rng_out.integers(0, n_candidates)) if n_candidates > 0 else -1
    selected_x, selected = x_tilde.copy(), (0, 0)
    all_rows = np.arange(data.n, dtype=np.int64)
    ones = np.ones(data.n)
    ifo = 0
    step = 0
    total_steps = J * max(m, 1)
    stop = False
    for j in range(1, J + 1):
        x0 = x_tilde
        if method is Method.SARAH:
            V = _problem.weighted_grad(data, all_rows, ones, x0)
            ifo += data.n
        else:
            S0 = draw(outer, rng_outer)
            V = _problem.weighted_grad(data, S0, outer.inv_p[S0], x0)
            ifo += S0.size
        if m == 0:
            # degenerate inner loop: one prox step with the restart gradient
            step += 1
            x_next = prox(reg, x0 - eta * V, eta)
            stop = config.max_ifo is not None and ifo >= config.max_ifo
            if on_step is not None:
                on_step({"epoch": j, "t": 0, "x": x0, "g": V, "x_next": x_next, "S": None})
            if rec.due(step, step == total_steps or stop):
                rec.record(step, ifo, x_next, V, x0)
            x_tilde = x_next
            if stop:
                break
            continue
        x_prev, x_cur = x0, x0
        for t in range(1, m + 1):
            step += 1
            if step - 1 == pick:
                selected_x, selected = x_cur.copy(), (j, t)
            S = draw(inner, rng_in)
            V = _problem.weighted_grad_diff(data, S, inner.inv_p[S], x_cur, x_prev) + V
            ifo += S.size
            x_next = prox(reg, x_cur - eta * V, eta)
            stop = config.max_ifo is not None and ifo >= config.max_ifo
            if on_step is not None:
                on_step({"epoch": j, "t": t, "x": x_cur, "g": V, "x_next": x_next, "S": S})
            if rec.due(step, step == total_steps or stop):
                rec.record(step, ifo, x_next, V, x_cur)
            x_prev, x_cur = x_cur, x_next
            if stop:
                break
        x_tilde = x_cur
        if stop:
            break
    return _report(data, reg, config, rec, x_tilde, selected_x, selected, ifo)


def prox_sarah_as(data: DatasetInstance, reg: Regularizer, config: OptimizerConfig,
                  on_step: Optional[Callable[[dict], None]] = None) -> RunReport:
    """ProxSARAH with arbitrary sampling.

    Each epoch restarts from the exact gradient (n IFO), then runs ``m`` steps of
    V_t = sum_{i in S_t} (grad f_i(x_t) - grad f_i(x_{t-1})) / (n p_i) + V_{t-1},
    x_{t+1} = prox_{eta r}(x_t - eta V_t), charging |S_t| IFO per step.
    """
    return _variance_reduced(data, reg, config, Method.SARAH, on_step)


def prox_spider_as(data: DatasetInstance, reg: Regularizer, config: OptimizerConfig,
                   on_step: Optional[Callable[[dict], None]] = None) -> RunReport:
    """ProxSPIDER with arbitrary sampling: ProxSARAH whose restart gradient is the
    importance-weighted estimate over an outer batch drawn from ``outer_scheme``."""
    return _variance_reduced(data, reg, config, Method.SPIDER, on_step)


_DISPATCH = {Method.SGD: prox_sgd_as, Method.SARAH: prox_sarah_as, Method.SPIDER: prox_spider_as}


def run(data: DatasetInstance, reg: Regularizer, config: OptimizerConfig, on_step=None) -> RunReport:
    return _DISPATCH[config.method](data, reg, config, on_step)
