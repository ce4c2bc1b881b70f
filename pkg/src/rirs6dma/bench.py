"""Timing comparison between the compiled kernels and their pure-python path."""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from . import rng as rngmod

__all__ = ["run_bench"]


def _time(fn, args, repeat):
    fn(*args)  # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def run_bench(repeat: int = 20, log=print) -> int:
    g = rngmod.stream(0, "bench")
    M, K, N, T = 6, 3, 32, 20
    H = g.normal(size=(K, M)) + 1j * g.normal(size=(K, M))
    W0 = kernels.mrt_init_batch(H[None], 1.0)[0]
    Gb = g.normal(size=(T, N, M)) + 1j * g.normal(size=(T, N, M))
    rb = g.normal(size=(T, K, N)) + 1j * g.normal(size=(T, K, N))
    hb = g.normal(size=(T, K, M)) + 1j * g.normal(size=(T, K, M))
    v = np.exp(1j * g.uniform(0, 2 * np.pi, N))
    Wf = g.normal(size=(M, K)) + 1j * g.normal(size=(M, K))

    cases = [
        ("wmmse_kernel", kernels.wmmse_kernel, (H, 1.0, 0.01, 1e-4, 100, 1e-8, W0)),
        ("rate_jacobian_kernel", kernels.rate_jacobian_kernel, (hb[0], rb[0], Gb[0], Wf, v, 0.01)),
        ("ssca_batch_kernel", kernels.ssca_batch_kernel, (Gb, rb, hb, v, 1.0, 0.01, 1e-4, 100, 1e-8)),
    ]

    log(f"kernel backend: {kernels.backend()} (RIRS6DMA_NUMBA=0 forces the numpy path)")
    log(f"{'kernel':24s} {'active':>12s} {'pure-python':>12s} {'speedup':>8s}")
    for name, fn, args in cases:
        t_active = _time(fn, args, repeat)
        plain = kernels.unjitted(fn)
        t_plain = _time(plain, args, max(1, repeat // 10)) if plain is not fn else t_active
        ratio = t_plain / t_active if t_active > 0 else float("nan")
        log(f"{name:24s} {t_active * 1e3:10.3f}ms {t_plain * 1e3:10.3f}ms {ratio:7.1f}x")
    return 0
