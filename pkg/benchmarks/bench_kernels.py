"""Compare the compiled and numpy kernels, per kernel and for whole runs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--K 2000]
"""

import argparse
import timeit

import numpy as np

from rcpp._backend import available_backends, get_kernels
from rcpp.compressors import ScalingSchedule, _KIND_CODE, make_compressor
from rcpp.core import RunConfig, run
from rcpp.digraph import build_mixing, make_ring
from rcpp.objectives import make_ridge


def kernel_cases(n, p):
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((n, p))
    U = rng.random((n, p + 1))
    mix = build_mixing(make_ring(n, n, seed=0), seed=0)
    prob = make_ridge(n, p, seed=0)
    outdeg = ((mix.R > 0).sum(axis=0) - 1).astype(np.int64)
    H, HW = np.zeros((n, p)), np.zeros((n, p))
    lam = np.full(n, 0.02)
    cases = {}
    for kind in ("qn", "topk", "uniform"):
        code = _KIND_CODE[kind]
        cases[f"compress_rows[{kind}]"] = lambda k, c=code: k.compress_rows(Z, c, 2, p // 2, 1.0, U)
    cases["mix_half_step[qn]"] = lambda k: k.mix_half_step(
        Z, H.copy(), HW.copy(), mix.R, 0.5, 0.5, 0.5, _KIND_CODE["qn"], 2, 1, 1.0, U, outdeg)
    cases["ridge_gradient_rows"] = lambda k: k.ridge_gradient_rows(prob.U, prob.v, prob.rho, Z)
    cases["snapshot_metrics"] = lambda k: k.snapshot_metrics(Z, Z, H, H, lam, mix.u_R, mix.u_C)
    return cases


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--K", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'kernel':<26}" + "".join(f"{b + ' (us)':>16}" for b in backends) + f"{'speedup':>10}")
    for name, fn in kernel_cases(args.n, args.p).items():
        times = [best_of(lambda: fn(get_kernels(b)), args.repeat, 200) * 1e6 for b in backends]
        speed = f"{times[-1] / times[0]:.1f}x" if len(times) == 2 else "-"
        print(f"{name:<26}" + "".join(f"{t:>16.2f}" for t in times) + f"{speed:>10}")

    mix = build_mixing(make_ring(args.n, args.n, seed=0), seed=0)
    prob = make_ridge(args.n, args.p, seed=0)
    print(f"\nfull runs, K={args.K}")
    print(f"{'compressor':<26}" + "".join(f"{b + ' (s)':>16}" for b in backends) + f"{'speedup':>10}")
    for kind in ("identity", "qn", "uniform"):
        cfg = RunConfig(0.02, 0.5, 0.5, 0.5, 0.5, ScalingSchedule(1.0, 0.995), args.K,
                        make_compressor(kind, args.p), mix)
        times = [best_of(lambda: run(cfg, prob, kernels=get_kernels(b)), max(1, args.repeat // 2), 1)
                 for b in backends]
        speed = f"{times[-1] / times[0]:.1f}x" if len(times) == 2 else "-"
        print(f"{kind:<26}" + "".join(f"{t:>16.3f}" for t in times) + f"{speed:>10}")


if __name__ == "__main__":
    main()
