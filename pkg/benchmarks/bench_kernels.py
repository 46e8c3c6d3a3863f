#!/usr/bin/env python3
"""Benchmark the jitted rank-1 kernels against the pure-numpy engine.

Times the three operations the fused kernels exist for — the damped
residual-sweep forward pass, its reverse-mode twin, and the NNLS
projected-gradient scale solve — on a range of problem sizes, running
each through both backends (``use_kernel=True`` / ``False``) and
checking that the results agree to ~1e-9 relative while it measures.

The env flag ``RESDECOMP_NUMBA`` only changes the *default* dispatch;
this script overrides the backend per call, so it compares both paths
in one process whenever numba is importable.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from resdecomp import (BranchSpec, GAUSS_SEIDEL, GRAD_FULL, ModelConfig,
                       RANK1_TIED, SIGMA_RIDGE, batch_backward, batch_forward,
                       init_model, solve_sigma_nnls)
from resdecomp import kernels

SWEEP_SIZES = (
    # (batch, dim, branches, sweeps)
    (32, 64, 2, 3),
    (256, 256, 4, 3),
    (64, 1024, 3, 3),
    (128, 128, 8, 3),
)

NNLS_SIZES = (
    # (dim, branches, instances per timing)
    (50, 4, 200),
    (200, 8, 100),
    (400, 12, 50),
)


def best_of(fn, repeats: int) -> float:
    """Best wall time over ``repeats`` runs, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def max_rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.abs(a).max(initial=0.0)), 1e-300)
    return float(np.abs(a - b).max(initial=0.0)) / scale


def _model(d: int, n: int, k: int):
    cfg = ModelConfig(n_branches=n, branch_spec=BranchSpec(RANK1_TIED),
                      sweeps=k, schedule=GAUSS_SEIDEL, damping=0.7,
                      sigma_mode=SIGMA_RIDGE, residual_grad_mode=GRAD_FULL,
                      seed=0)
    return init_model(cfg, d)


def _row(label: str, t_kernel: float, t_numpy: float, rel: float) -> str:
    speedup = t_numpy / t_kernel if t_kernel > 0 else float("inf")
    return (f"  {label:<28} {t_kernel * 1e3:9.2f}    {t_numpy * 1e3:9.2f}"
            f"   {speedup:6.2f}x   {rel:.1e}")


def bench_sweep_forward(repeats: int) -> None:
    print("sweep forward                    numba ms     numpy ms   speedup   max rel diff")
    rng = np.random.default_rng(0)
    for B, d, n, k in SWEEP_SIZES:
        model = _model(d, n, k)
        X = rng.standard_normal((B, d))
        S = rng.uniform(0.5, 1.5, size=(B, n))
        state_k = batch_forward(model, X, S, use_kernel=True)
        state_n = batch_forward(model, X, S, use_kernel=False)
        rel = max(max_rel(state_k.components, state_n.components),
                  max_rel(state_k.xhat, state_n.xhat))
        tk = best_of(lambda: batch_forward(model, X, S, use_kernel=True), repeats)
        tn = best_of(lambda: batch_forward(model, X, S, use_kernel=False), repeats)
        print(_row(f"B={B} d={d} N={n} K={k}", tk, tn, rel))


def bench_sweep_backward(repeats: int) -> None:
    print("sweep backward (full grads)      numba ms     numpy ms   speedup   max rel diff")
    rng = np.random.default_rng(1)
    for B, d, n, k in SWEEP_SIZES:
        model = _model(d, n, k)
        X = rng.standard_normal((B, d))
        S = rng.uniform(0.5, 1.5, size=(B, n))
        # both backward paths consume the same forward history so the
        # parity number isolates the backward computation itself
        state = batch_forward(model, X, S, use_kernel=False)
        comp_grads = rng.standard_normal((B, n, d))
        code_grads = [rng.standard_normal((B, 1)) for _ in range(n)]
        gk = batch_backward(model, S, state, comp_grads, code_grads, use_kernel=True)
        gn = batch_backward(model, S, state, comp_grads, code_grads, use_kernel=False)
        rel = max(max_rel(gk[i][name], gn[i][name])
                  for i in range(n) for name in gk[i])
        tk = best_of(lambda: batch_backward(model, S, state, comp_grads,
                                            code_grads, use_kernel=True), repeats)
        tn = best_of(lambda: batch_backward(model, S, state, comp_grads,
                                            code_grads, use_kernel=False), repeats)
        print(_row(f"B={B} d={d} N={n} K={k}", tk, tn, rel))


def bench_nnls(repeats: int) -> None:
    print("NNLS scale solve                 numba ms     numpy ms   speedup   max rel diff")
    rng = np.random.default_rng(2)
    for d, n, count in NNLS_SIZES:
        problems = []
        for _ in range(count):
            H = rng.standard_normal((d, n))
            x = H @ rng.uniform(0.0, 2.0, size=n) + 0.1 * rng.standard_normal(d)
            problems.append((H, x))
        rel = 0.0
        for H, x in problems:
            sk, _ = solve_sigma_nnls(H, x, use_kernel=True)
            sn, _ = solve_sigma_nnls(H, x, use_kernel=False)
            rel = max(rel, max_rel(sk, sn))

        def run(use_kernel):
            for H, x in problems:
                solve_sigma_nnls(H, x, use_kernel=use_kernel)

        tk = best_of(lambda: run(True), repeats)
        tn = best_of(lambda: run(False), repeats)
        print(_row(f"d={d} N={n} x{count} solves", tk, tn, rel))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing runs per cell; best is reported")
    args = parser.parse_args()

    print(f"numpy {np.__version__}, numba available: {kernels.HAVE_NUMBA}, "
          f"default backend: {kernels.backend()}")
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare "
                         "(the package runs on the numpy engine).")

    print("compiling kernels...", flush=True)
    kernels.warmup()
    print()
    bench_sweep_forward(args.repeats)
    print()
    bench_sweep_backward(args.repeats)
    print()
    bench_nnls(args.repeats)


if __name__ == "__main__":
    main()
