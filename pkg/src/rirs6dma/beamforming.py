"""Short-timescale transmit beamforming: MRT, SINR/rate evaluation, WMMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = ["Precoder", "WmmseResult", "BisectionError", "mrt", "sinr_and_rate", "wmmse"]


class BisectionError(RuntimeError):
    """The dual bracket for the transmit-power constraint could not be established."""


@dataclass(frozen=True)
class Precoder:
    """Transmit beamforming matrix, columns w_k, under a total power budget."""

    w: np.ndarray  # (M, K)
    power_budget: float

    def __post_init__(self):
        used = float(np.sum(np.abs(self.w) ** 2))
        if used > self.power_budget * (1 + 1e-9):
            raise ValueError(f"precoder power {used:.6g} exceeds budget {self.power_budget:.6g}")

    @property
    def power_used(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass(frozen=True)
class WmmseResult:
    precoder: Precoder
    rate_trace: np.ndarray
    iterations: int
    mu: float
    converged: bool

    @property
    def sum_rate(self) -> float:
        return float(self.rate_trace[-1])


def mrt(h_eff: np.ndarray, p_t: float) -> np.ndarray:
    """Maximum-ratio transmission: w = sqrt(P) h / ||h||."""
    h_eff = np.asarray(h_eff, complex)
    nrm = np.linalg.norm(h_eff)
    if nrm == 0:
        raise ValueError("MRT undefined for a zero channel")
    return np.sqrt(p_t) * h_eff / nrm


def sinr_and_rate(h_eff: np.ndarray, W: np.ndarray, sigma2: float):
    """Per-user SINRs and the log2 sum rate.

    ``h_eff`` stacks the effective channels as rows (K, M); ``W`` holds the
    beamforming vectors as columns (M, K).
    """
    h_eff = np.ascontiguousarray(np.atleast_2d(np.asarray(h_eff, complex)))
    W = np.ascontiguousarray(np.asarray(W, complex))
    if W.ndim == 1:
        W = W[:, None]
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    gamma, rsum = kernels.sum_rate_kernel(h_eff, W, float(sigma2))
    return gamma, float(rsum)


def wmmse(
    h_eff: np.ndarray,
    p_t: float,
    sigma2: float,
    tol: float = 1e-4,
    max_iter: int = 100,
    power_rtol: float = 1e-10,
    w_init: np.ndarray | None = None,
) -> WmmseResult:
    """Sum-rate beamforming via the weighted-MMSE updates with a bisected dual.

    Starts from equal-power MRT unless ``w_init`` is given; the achieved sum
    rate is non-decreasing over full iterations and the returned precoder is
    always power-feasible.
    """
    h_eff = np.ascontiguousarray(np.atleast_2d(np.asarray(h_eff, complex)))
    if w_init is None:
        w_init = kernels.mrt_init_batch(h_eff[None], p_t)[0]
    w_init = np.ascontiguousarray(np.asarray(w_init, complex))
    W, trace, n_iter, mu, status = kernels.wmmse_kernel(
        h_eff, float(p_t), float(sigma2), float(tol), int(max_iter), float(power_rtol), w_init
    )
    if status == 2:
        raise BisectionError("power-constraint bisection failed to bracket the dual variable")
    return WmmseResult(
        precoder=Precoder(W, p_t),
        rate_trace=np.asarray(trace),
        iterations=int(n_iter),
        mu=float(mu),
        converged=status == 0,
    )
