"""Hot numeric kernels: WMMSE solves, rate evaluation, reflection gradients.

These dominate the runtime of the multi-user optimizers (thousands of small
per-sample solves), so the definitions in :mod:`rirs6dma._kernel_defs` are
numba-compiled here by default. Setting ``RIRS6DMA_NUMBA=0`` in the environment
selects the uncompiled pure-numpy path. ``backend()`` reports the active path,
and the ``plain`` namespace always exposes the uncompiled functions for parity
tests and benchmarks.
"""

from __future__ import annotations

import os
import types

import numpy as np

from . import _kernel_defs as plain

__all__ = [
    "backend",
    "plain",
    "unjitted",
    "sum_rate_kernel",
    "wmmse_kernel",
    "wmmse_rate_batch_kernel",
    "rate_jacobian_kernel",
    "ssca_batch_kernel",
    "mrt_init_batch",
]

_env = os.environ.get("RIRS6DMA_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "off", "no")


def _compile_all():
    """Compile clones of the kernel definitions with helper calls re-bound to
    their compiled forms; the originals in ``plain`` stay untouched."""
    from numba import njit

    namespace = dict(plain.__dict__)
    compiled = {}
    for name in plain.KERNEL_ORDER:
        f = plain.__dict__[name]
        clone = types.FunctionType(f.__code__, namespace, f.__name__, f.__defaults__, f.__closure__)
        compiled[name] = njit(cache=True, nogil=True)(clone)
        namespace[name] = compiled[name]
    return compiled


if _want_numba:
    try:
        _impl = _compile_all()
        _BACKEND = "numba"
    except ImportError:  # pragma: no cover - environment without numba
        _impl = {name: plain.__dict__[name] for name in plain.KERNEL_ORDER}
        _BACKEND = "numpy"
else:
    _impl = {name: plain.__dict__[name] for name in plain.KERNEL_ORDER}
    _BACKEND = "numpy"

sum_rate_kernel = _impl["sum_rate_kernel"]
wmmse_kernel = _impl["wmmse_kernel"]
wmmse_rate_batch_kernel = _impl["wmmse_rate_batch_kernel"]
rate_jacobian_kernel = _impl["rate_jacobian_kernel"]
ssca_batch_kernel = _impl["ssca_batch_kernel"]


def backend() -> str:
    """Active kernel backend, "numba" or "numpy"."""
    return _BACKEND


def unjitted(fn):
    """Return the pure-python implementation of a dispatched kernel."""
    return plain.__dict__.get(getattr(fn, "__name__", ""), fn)


def mrt_init_batch(H_batch: np.ndarray, p_t: float) -> np.ndarray:
    """Equal-power MRT starting precoders for a batch of channels (T, K, M)."""
    norms = np.linalg.norm(H_batch, axis=2, keepdims=True)
    scale = np.sqrt(p_t / H_batch.shape[1]) / np.where(norms > 0, norms, 1.0)
    return np.ascontiguousarray((H_batch * scale).transpose(0, 2, 1))
