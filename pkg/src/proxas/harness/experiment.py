"""Experiment runner: builds schemes and step sizes, runs each method, writes traces."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..optimizers import Method, OptimizerConfig, RunReport, default_stepsize, q_constant, run
from ..problem import DatasetInstance, loss_constants
from ..regularizers import Regularizer
from ..sampling import make_independent_optimal, make_uniform
from .config import ExperimentConfig, RunSpec
from .libsvm import parse_label_map, parse_libsvm
from .synthetic import gen_synthetic

log = logging.getLogger(__name__)

CSV_HEADER = "step,ifo,objective,residual,nnz,elapsed"


def load_dataset(config: ExperimentConfig) -> DatasetInstance:
    """LibSVM file if ``data`` is set, otherwise the synthetic spec."""
    if config.data is None:
        return gen_synthetic(config.synthetic)
    label_map = parse_label_map(config.label_map) if config.label_map else None
    return parse_libsvm(config.data, label_map=label_map, n_features=config.n_features)


def initial_point(config: ExperimentConfig, d: int) -> np.ndarray:
    # x = 0 is a fixed point of the l0 / l1/2 prox iteration under the theory
    # step sizes, so runs start from a small seeded Gaussian by default.
    if config.init == "zeros":
        return np.zeros(d)
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 0x1A17]))
    return config.init_scale * rng.standard_normal(d)


def build_optimizer_config(data: DatasetInstance, config: ExperimentConfig, spec: RunSpec,
                           run_index: int, eta: Optional[float] = None) -> OptimizerConfig:
    """Schemes, sizes and step size for one method/scheme combination.

    SGD and the SPIDER restart batch sample with G-weights; the SARAH/SPIDER
    inner batches with L-weights. SGD runs ``epochs * m`` iterations so every
    method takes the same number of prox steps.
    """
    n = data.n
    b, m, B = config.sizes(n)
    const = loss_constants(data)
    indep = spec.scheme == "I"
    weights = const.G if spec.method is Method.SGD else const.L
    inner = make_independent_optimal(weights, b) if indep else make_uniform(n, b)
    outer = None
    if spec.method is Method.SPIDER:
        outer = make_independent_optimal(const.G, B) if indep else make_uniform(n, B)
    if eta is None:
        eta = _resolve_eta(config, spec, const.L_tilde, inner, const.L, m)
    epochs = config.epochs * max(m, 1) if spec.method is Method.SGD else config.epochs
    return OptimizerConfig(
        method=spec.method, eta=eta, epochs=epochs, inner_scheme=inner, outer_scheme=outer,
        m=m, seed=int(config.seed) ^ run_index, output_rule=config.output_rule,
        stride=config.stride, x0=initial_point(config, data.d), max_ifo=config.max_ifo,
    )


def _resolve_eta(config, spec, L_tilde, inner, L, m) -> float:
    if config.eta == "theory":
        if spec.method is Method.SGD:
            return default_stepsize(Method.SGD, L_tilde)
        return default_stepsize(spec.method, L_tilde, m, q_constant(inner, L))
    if config.eta == "grid":
        raise ValueError("eta = grid must be resolved by grid_search first")
    return float(config.eta)


def format_trace(report: RunReport) -> str:
    lines = [CSV_HEADER]
    for r in report.trace:
        lines.append(f"{r.step},{r.ifo},{r.objective:.17g},{r.residual:.17g},{r.nnz},{r.elapsed:.17g}")
    return "\n".join(lines) + "\n"


def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class ExperimentResult:
    reports: dict[str, RunReport]
    etas: dict[str, float]
    f_star: float
    summary_path: Path
    csv_paths: dict[str, Path]


def _run_all(data, reg, config, etas, jobs):
    tasks = [(k, spec) for k, spec in enumerate(config.runs)]

    def one(item):
        k, spec = item
        oc = build_optimizer_config(data, config, spec, k, etas.get(spec.name))
        return spec.name, run(data, reg, oc)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return dict(ex.map(one, tasks))
    return dict(map(one, tasks))


def run_experiment(config: ExperimentConfig, data: Optional[DatasetInstance] = None,
                   out: Optional[str] = None) -> ExperimentResult:
    """Run every configured combination and write ``<name>.csv`` plus ``summary.json``."""
    if data is None:
        data = load_dataset(config)
    reg = Regularizer(config.regularizer, config.lam)
    etas: dict[str, float] = {}
    if config.eta == "grid":
        grid = grid_search(config, config.etas, data=data)
        for name, entry in grid["runs"].items():
            if entry["selected"] is None:
                raise ValueError(f"{name}: every step size in the grid diverged")
            etas[name] = entry["selected"]
    reports = _run_all(data, reg, config, etas, config.jobs)
    out_dir = Path(out if out is not None else config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_paths = {}
    for spec in config.runs:
        path = out_dir / f"{spec.name}.csv"
        _write_text(path, format_trace(reports[spec.name]))
        csv_paths[spec.name] = path
    observed = [r.objective for rep in reports.values() for r in rep.trace if math.isfinite(r.objective)]
    f_star = max(0.0, min(observed)) if observed else 0.0
    b, m, B = config.sizes(data.n)
    summary = {
        "n": data.n, "d": data.d, "b": b, "m": m, "B": B,
        "regularizer": config.regularizer.value, "lambda": config.lam,
        "seed": config.seed, "f_star": f_star,
        "runs": {},
    }
    for k, spec in enumerate(config.runs):
        rep = reports[spec.name]
        finite = [r.residual for r in rep.trace if math.isfinite(r.residual)]
        summary["runs"][spec.name] = {
            "method": spec.method.value, "scheme": spec.scheme, "seed": int(config.seed) ^ k,
            "eta": rep.config.eta, "iterations": rep.config.epochs, "ifo": rep.ifo,
            "initial_objective": rep.trace[0].objective if rep.trace else rep.final_objective,
            "final_objective": rep.final_objective,
            "first_residual": finite[0] if finite else None,
            "min_residual": min(finite) if finite else None,
            "final_residual": finite[-1] if finite else None,
            "final_nnz": int(np.count_nonzero(rep.x_last)),
            "selected": list(rep.selected),
        }
    summary_path = out_dir / "summary.json"
    _write_text(summary_path, json.dumps(summary, indent=2, sort_keys=True, allow_nan=True) + "\n")
    return ExperimentResult(reports, {s.name: reports[s.name].config.eta for s in config.runs},
                            f_star, summary_path, csv_paths)


def default_budget(config: ExperimentConfig, n: int) -> int:
    """IFO budget per grid point: what one SARAH run of the configured length costs."""
    b, m, _ = config.sizes(n)
    return max(1, config.epochs) * (n + m * b)


def grid_search(config: ExperimentConfig, eta_grid, data: Optional[DatasetInstance] = None,
                budget: Optional[int] = None) -> dict:
    """Try each step size under a common IFO budget and pick the best per combination.

    Selection minimises the final objective; ties go to the smaller step size.
    Non-finite outcomes are flagged and excluded. A combination whose every
    entry is non-finite gets ``selected = None``.
    """
    etas = sorted({float(e) for e in eta_grid})
    if not etas:
        raise ValueError("eta grid is empty")
    if any(not e > 0 for e in etas):
        raise ValueError("step sizes must be > 0")
    if data is None:
        data = load_dataset(config)
    reg = Regularizer(config.regularizer, config.lam)
    if budget is None:
        budget = config.max_ifo if config.max_ifo is not None else default_budget(config, data.n)
    cfg = replace(config, max_ifo=budget, stride=0)
    report = {"budget": budget, "etas": etas, "runs": {}}
    for k, spec in enumerate(config.runs):
        entries = []
        for eta in etas:
            with np.errstate(all="ignore"):
                rep = run(data, reg, build_optimizer_config(data, cfg, spec, k, eta))
            f = rep.final_objective
            ok = bool(math.isfinite(f) and np.all(np.isfinite(rep.x_last)))
            entries.append({"eta": eta, "final_objective": f if ok else None, "finite": ok, "ifo": rep.ifo})
        good = [e for e in entries if e["finite"]]
        # etas ascending, so min() keeps the smaller step size on ties
        best = min(good, key=lambda e: e["final_objective"]) if good else None
        if best is None:
            log.warning("%s: every step size diverged", spec.name)
        report["runs"][spec.name] = {"entries": entries, "selected": None if best is None else best["eta"]}
    return report
