"""Compare the compiled and pure-Python gradient kernels.

    python benchmarks/bench_kernels.py [--n 2000] [--d 200] [--batch 45] [--repeat 20]

Prints per-call timings for a minibatch gradient, a minibatch gradient
difference, a full gradient and the loss, plus the speedup and the largest
disagreement between the two backends.
"""
import argparse
import time

import numpy as np

from proxas import _kernels_py
from proxas.harness.synthetic import SyntheticSpec, gen_synthetic

try:
    from proxas import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        res = fn()
    return (time.perf_counter() - t0) / repeat, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=200)
    ap.add_argument("--sparsity", type=float, default=0.5)
    ap.add_argument("--batch", type=int, default=45)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    data = gen_synthetic(SyntheticSpec(n=args.n, d=args.d, sparsity=args.sparsity, seed=1))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(data.d) * 0.1
    x_prev = x + rng.standard_normal(data.d) * 0.01
    batch = np.sort(rng.choice(data.n, args.batch, replace=False)).astype(np.int64)
    coefs = rng.uniform(1.0, 50.0, args.batch)
    all_rows = np.arange(data.n, dtype=np.int64)
    ones = np.ones(data.n)
    csr = (data.indptr, data.indices, data.data, data.labels)

    def cases(k):
        return {
            "minibatch grad": lambda: k.weighted_grad_sum(*csr, x, batch, coefs, np.empty(data.d)),
            "minibatch grad diff": lambda: k.weighted_grad_diff_sum(*csr, x, x_prev, batch, coefs, np.empty(data.d)),
            "full grad": lambda: k.weighted_grad_sum(*csr, x, all_rows, ones, np.empty(data.d)),
            "loss": lambda: k.loss_sum(*csr, x),
        }

    print(f"n={data.n} d={data.d} nnz={data.data.size} batch={args.batch}")
    if _kernels is None:
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'kernel':22s} {'python':>11s} {'cython':>11s} {'speedup':>8s} {'max diff':>9s}")
    py_cases = cases(_kernels_py)
    cy_cases = cases(_kernels) if _kernels is not None else {}
    for name, fn in py_cases.items():
        tp, rp = _time(fn, max(1, args.repeat // 4))
        if name in cy_cases:
            tc, rc = _time(cy_cases[name], args.repeat)
            diff = float(np.max(np.abs(np.asarray(rp) - np.asarray(rc))))
            print(f"{name:22s} {tp * 1e6:9.1f}us {tc * 1e6:9.1f}us {tp / tc:7.1f}x {diff:9.1e}")
        else:
            print(f"{name:22s} {tp * 1e6:9.1f}us")


if __name__ == "__main__":
    main()
