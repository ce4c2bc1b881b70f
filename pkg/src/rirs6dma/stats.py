"""Closed-form expected channel power gains from statistical CSI.

For each user the expected squared norm of the effective channel decomposes into
a constant direct-link power ``c1``, a quadratic form ``v^T Ghat v*`` in the
reflection vector, and a cross term coupling the LoS components of all three
links. These closed forms drive the long-timescale optimizers; a brute-force
Monte-Carlo estimator over instantaneous draws serves as their oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    StatisticalCsi,
    bs_user_frv,
    irs_user_frm,
    irs_user_frv,
    receive_frm,
    receive_frv,
    sample_icsi_batch,
    transmit_frv,
)
from .geometry import ArraySurfaceConfig, IrsLayout, RadioContext

__all__ = [
    "ExpectedGainTerms",
    "EffectiveGainMatrix",
    "direct_power_c1",
    "reflected_gain_matrix",
    "gain_terms",
    "expected_equivalent_gain",
    "expected_gain",
    "heff_matrix",
    "mc_gain_oracle",
]


def direct_power_c1(bs_user_stats, m: int) -> float:
    """Expected direct-link power M (|beta_LoS|^2 + sum of NLoS variances)."""
    return m * (abs(bs_user_stats.los_coefficient) ** 2 + float(np.sum(bs_user_stats.nlos_variances)))


def _xi_diagonal(bs_irs_stats, m: int) -> np.ndarray:
    """Diagonal of Xi = M diag(|beta0|^2, sigma_1^2, ..., sigma_L^2)."""
    return m * np.concatenate(([abs(bs_irs_stats.los_coefficient) ** 2], bs_irs_stats.nlos_variances))


def reflected_gain_matrix(
    bs_irs_stats,
    irs_user_stats,
    layout: IrsLayout,
    phi: float,
    m: int,
    wavelength: float,
) -> np.ndarray:
    """N x N Hermitian matrix Ghat of the expected reflected-link power.

    Ghat sums, over the surface-to-user paths, the congruences
    ``w diag(abar)^H Gbar diag(abar)`` with ``Gbar = G_r Xi G_r^H`` and weight
    ``w`` the LoS power for path 0 and the path variance otherwise.
    """
    g_r = receive_frm(layout, phi, bs_irs_stats.arrival_angles, wavelength)
    xi = _xi_diagonal(bs_irs_stats, m)
    g_bar = (g_r * xi) @ g_r.conj().T

    weights = np.concatenate(
        ([abs(irs_user_stats.los_coefficient) ** 2], irs_user_stats.nlos_variances)
    )
    a_bar = irs_user_frm(layout, phi, irs_user_stats.departure_angles, wavelength)
    g_hat = np.zeros_like(g_bar)
    for w, col in zip(weights, a_bar.T):
        g_hat += w * (np.conj(col)[:, None] * g_bar * col[None, :])
    return 0.5 * (g_hat + g_hat.conj().T)


@dataclass(frozen=True)
class ExpectedGainTerms:
    """All statistics needed to evaluate one user's expected equivalent gain."""

    c1: float
    xi: np.ndarray
    g_hat: np.ndarray
    omega: complex
    a_hat_irs: np.ndarray
    a_hat_bs: complex
    phi: float

    @property
    def n_elements(self) -> int:
        return self.a_hat_irs.size


def gain_terms(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    user: int = 0,
) -> ExpectedGainTerms:
    """Assemble the expected-gain terms for one user at a given configuration."""
    lam = radio.wavelength
    q, psi, phi = config.q, config.psi, config.phi
    m = q.size
    bs_irs = scsi.bs_irs
    ru = scsi.irs_user[user]
    bu = scsi.bs_user[user]

    a_r0 = receive_frv(layout, phi, bs_irs.arrival_angles[0], lam)
    a_bar0 = irs_user_frv(layout, phi, ru.departure_angles[0], lam)
    a_hat_irs = np.conj(a_bar0) * a_r0

    a_t0 = transmit_frv(q, psi, bs_irs.departure_angles[0], lam)
    a_tilde0 = bs_user_frv(q, psi, bu.departure_angles[0], lam)
    a_hat_bs = complex(np.vdot(a_t0, a_tilde0))

    # the cross term comes from r^H Theta G h, so the surface-to-user LoS
    # coefficient enters conjugated
    omega = bs_irs.los_coefficient * np.conj(ru.los_coefficient) * bu.los_coefficient
    return ExpectedGainTerms(
        c1=direct_power_c1(bu, m),
        xi=_xi_diagonal(bs_irs, m),
        g_hat=reflected_gain_matrix(bs_irs, ru, layout, phi, m, lam),
        omega=omega,
        a_hat_irs=a_hat_irs,
        a_hat_bs=a_hat_bs,
        phi=phi,
    )


def _quadratic(terms: ExpectedGainTerms, v: np.ndarray) -> float:
    return float(np.real(v @ terms.g_hat @ np.conj(v)))


def expected_equivalent_gain(terms: ExpectedGainTerms, v: np.ndarray) -> float:
    """Phase-decoupled expected gain c1 + v^T Ghat v* + 2|omega||ahat_bs| Re{v^T ahat_irs}.

    Equals :func:`expected_gain` after pre-rotating ``v`` by the phase of
    ``omega * ahat_bs``; the two agree at their common maximizers.
    """
    cross = 2.0 * abs(terms.omega) * abs(terms.a_hat_bs) * float(np.real(v @ terms.a_hat_irs))
    return terms.c1 + _quadratic(terms, v) + cross


def expected_gain(terms: ExpectedGainTerms, v: np.ndarray) -> float:
    """Expected equivalent channel power gain with the physical cross-term phase."""
    cross = 2.0 * float(np.real(terms.omega * terms.a_hat_bs * (v @ terms.a_hat_irs)))
    return terms.c1 + _quadratic(terms, v) + cross


@dataclass(frozen=True)
class EffectiveGainMatrix:
    """(N+1) x (N+1) Hermitian lift of the expected gain quadratic form."""

    matrix: np.ndarray
    compensated: bool

    @property
    def n_elements(self) -> int:
        return self.matrix.shape[0] - 1


def heff_matrix(terms: ExpectedGainTerms, compensated: bool = True) -> EffectiveGainMatrix:
    """Build the lifted Hermitian matrix [[Ghat, b], [b^H, c1]].

    With ``compensated=True`` the off-diagonal block uses |omega||ahat_bs| so the
    trace identity matches :func:`expected_equivalent_gain`; with ``False`` it
    keeps the complex product (required when summing lifts across users).
    """
    n = terms.n_elements
    h = np.zeros((n + 1, n + 1), complex)
    h[:n, :n] = terms.g_hat
    if compensated:
        b = abs(terms.omega) * abs(terms.a_hat_bs) * terms.a_hat_irs
    else:
        b = terms.omega * terms.a_hat_bs * terms.a_hat_irs
    h[:n, n] = b
    h[n, :n] = np.conj(b)
    h[n, n] = terms.c1
    return EffectiveGainMatrix(h, compensated)


def mc_gain_oracle(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    v: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    user: int = 0,
    chunk: int = 20000,
) -> float:
    """Brute-force sample mean of ||h_k + g_k||^2 over fresh instantaneous draws.

    Deliberately materializes every drawn channel and applies the definition of
    the effective channel directly, independent of any closed form.
    """
    total = 0.0
    done = 0
    vc = np.conj(v)
    while done < n_samples:
        t = min(chunk, n_samples - done)
        G, r, h = sample_icsi_batch(scsi, config, layout, radio, t, rng)
        h_eff = h[:, user, :] + np.einsum("tnm,tn->tm", np.conj(G), vc * r[:, user, :])
        total += float(np.sum(np.abs(h_eff) ** 2))
        done += t
    return total / n_samples
