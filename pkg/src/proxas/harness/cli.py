"""Command line entry point.

    proxas run --config exp.cfg [--out DIR]
    proxas grid --config exp.cfg [--etas 10,1,0.1] [--out DIR]
    proxas gen-data --n 500 --d 100 --het 10 --sparsity 0 --seed 0 --out data.libsvm
    proxas verify

Exit codes: 0 success, 1 configuration error, 2 data error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .libsvm import LibSVMError, write_libsvm
from .synthetic import SyntheticSpec, gen_synthetic

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


def _parse_etas(text):
    try:
        etas = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad eta list {text!r}") from None
    if not etas:
        raise ConfigError("eta list is empty")
    return etas


def _cmd_run(args):
    from .experiment import run_experiment

    config = load_config(args.config)
    if args.out:
        config = replace(config, out=args.out)
    res = run_experiment(config)
    for name, rep in res.reports.items():
        print(f"{name:10s} eta={rep.config.eta:.4g} ifo={rep.ifo} F={rep.final_objective:.6g}")
    print(f"F* = {res.f_star:.6g}; wrote {len(res.csv_paths)} traces and {res.summary_path}")
    return EXIT_OK


def _cmd_grid(args):
    from .experiment import grid_search

    config = load_config(args.config)
    etas = _parse_etas(args.etas) if args.etas else list(config.etas)
    report = grid_search(config, etas)
    out = Path(args.out or config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "grid.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for name, entry in report["runs"].items():
        vals = " ".join(f"{e['eta']:g}:{e['final_objective']:.5g}" if e["finite"] else f"{e['eta']:g}:non-finite"
                        for e in entry["entries"])
        print(f"{name:10s} selected={entry['selected']}  {vals}")
    return EXIT_OK


def _cmd_gen(args):
    try:
        spec = SyntheticSpec(n=args.n, d=args.d, het=args.het, sparsity=args.sparsity,
                             noise=args.noise, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    data = gen_synthetic(spec)
    write_libsvm(data, args.out)
    print(f"wrote {data.n} x {data.d} dataset to {args.out}")
    return EXIT_OK


def _cmd_verify(args):
    from .checks import format_table, run_checks

    results = run_checks(seed=args.seed)
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="proxas", description="Proximal stochastic methods with arbitrary sampling")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write trace CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="step-size grid search")
    p.add_argument("--config", required=True)
    p.add_argument("--etas", help="comma-separated step sizes")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("gen-data", help="write a synthetic dataset in LibSVM format")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--het", type=float, default=10.0)
    p.add_argument("--sparsity", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("verify", help="run the oracle self-check suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LibSVMError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining ValueErrors come from dataset/scheme validation
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
