"""Compare the compiled CSR kernel against the numpy fallback.

The workload mirrors the hot loop of filter propagation: repeated
CSR @ dense products on a feature block. Run from the repo root:

    python benchmarks/bench_spmm.py [--nodes 3000] [--avg-degree 10]
                                    [--cols 64] [--n-terms 10] [--repeats 20]
"""
import argparse
import time

import numpy as np

from spcnet import _kernels
from spcnet.data import SbmConfig, generate_sbm
from spcnet.graph import build_normalized_laplacian


def build_operator(nodes, avg_degree, seed=0):
    p_edge = min(0.9, avg_degree / nodes)
    g = generate_sbm(SbmConfig(nodes=nodes, p=p_edge, q=p_edge * 0.999,
                               seed=seed))
    return build_normalized_laplacian(g)


def bench(fn, lap, block, n_terms, repeats):
    best = np.inf
    for _ in range(repeats):
        prop = block
        t0 = time.perf_counter()
        for n in range(1, n_terms + 1):
            prop = fn(lap.indptr, lap.indices, lap.data, prop) * (-1.0 / n)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=3000)
    ap.add_argument("--avg-degree", type=float, default=10.0)
    ap.add_argument("--cols", type=int, default=64)
    ap.add_argument("--n-terms", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    lap = build_operator(args.nodes, args.avg_degree)
    rng = np.random.default_rng(1)
    block = np.ascontiguousarray(rng.standard_normal((args.nodes, args.cols)))

    backends = [("numpy fallback", _kernels.csr_matmat_numpy)]
    try:
        from spcnet._kernels import _spmm
        backends.insert(0, ("compiled", _spmm.csr_matmat))
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")

    out_ref = None
    print(f"nodes={args.nodes} nnz={lap.nnz} cols={args.cols} "
          f"n_terms={args.n_terms} (best of {args.repeats})")
    times = {}
    for name, fn in backends:
        elapsed = bench(fn, lap, block, args.n_terms, args.repeats)
        times[name] = elapsed
        out = fn(lap.indptr, lap.indices, lap.data, block)
        if out_ref is None:
            out_ref = out
        else:
            print(f"  max |diff| vs first backend: "
                  f"{np.abs(out - out_ref).max():.3e}")
        per_spmm = elapsed / args.n_terms * 1e3
        print(f"  {name:16s} {elapsed * 1e3:9.3f} ms/propagation "
              f"({per_spmm:.3f} ms per product)")
    if len(times) == 2:
        a, b = (times[n] for n, _ in backends)
        print(f"  speedup: {b / a:.2f}x")


if __name__ == "__main__":
    main()
