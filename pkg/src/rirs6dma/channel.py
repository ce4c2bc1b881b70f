"""Field-response channel model: statistical CSI and instantaneous draws.

The BS-to-surface channel is ``G = G_r(phi) diag(beta) G_t(q, psi)^H`` where the
columns of the field-response matrices are per-path steering vectors, the LoS
path coefficient is deterministic and the NLoS coefficients are i.i.d.
circularly-symmetric complex Gaussians. The surface-to-user and BS-to-user
links follow the same construction with their own angle sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArraySurfaceConfig, IrsLayout, NodeGeometry, RadioContext

ANGLE_LOW = np.pi / 6.0
ANGLE_HIGH = 5.0 * np.pi / 6.0

__all__ = [
    "LinkStatistics",
    "StatisticalCsi",
    "InstantaneousChannels",
    "transmit_frv",
    "receive_frv",
    "irs_user_frv",
    "bs_user_frv",
    "transmit_frm",
    "receive_frm",
    "irs_user_frm",
    "bs_user_frm",
    "path_loss_amplitude",
    "sample_scsi",
    "sample_icsi",
    "sample_path_gains",
    "effective_channel",
]


# ---------------------------------------------------------------------------
# field-response vectors


def transmit_frv(q: np.ndarray, psi: float, aod: float, wavelength: float) -> np.ndarray:
    """BS transmit steering vector toward the surface: exp(+j 2pi/lam q cos(aod + psi))."""
    q = np.asarray(q, float)
    return np.exp(2j * np.pi / wavelength * q * np.cos(aod + psi))


def receive_frv(layout: IrsLayout, phi: float, aoa: float, wavelength: float) -> np.ndarray:
    """Surface receive steering vector: exp(+j 2pi/lam x cos(aoa - phi))."""
    return np.exp(2j * np.pi / wavelength * layout.x * np.cos(aoa - phi))


def irs_user_frv(layout: IrsLayout, phi: float, aod: float, wavelength: float) -> np.ndarray:
    """Surface-to-user steering vector: exp(-j 2pi/lam x cos(aod + phi))."""
    return np.exp(-2j * np.pi / wavelength * layout.x * np.cos(aod + phi))


def bs_user_frv(q: np.ndarray, psi: float, aod: float, wavelength: float) -> np.ndarray:
    """BS-to-user steering vector: exp(-j 2pi/lam q cos(aod - psi))."""
    q = np.asarray(q, float)
    return np.exp(-2j * np.pi / wavelength * q * np.cos(aod - psi))


def _frm(frv, axis_arg, rot: float, angles: np.ndarray, wavelength: float) -> np.ndarray:
    cols = [frv(axis_arg, rot, a, wavelength) for a in np.asarray(angles, float)]
    return np.stack(cols, axis=1)


def transmit_frm(q, psi, angles, wavelength):
    """M x (L+1) matrix of transmit FRVs, one column per path."""
    return _frm(transmit_frv, q, psi, angles, wavelength)


def receive_frm(layout, phi, angles, wavelength):
    return _frm(receive_frv, layout, phi, angles, wavelength)


def irs_user_frm(layout, phi, angles, wavelength):
    return _frm(irs_user_frv, layout, phi, angles, wavelength)


def bs_user_frm(q, psi, angles, wavelength):
    return _frm(bs_user_frv, q, psi, angles, wavelength)


# ---------------------------------------------------------------------------
# statistical CSI


@dataclass(frozen=True)
class LinkStatistics:
    """Per-link angle set, LoS coefficient, and NLoS path variances.

    ``departure_angles`` has length L+1 with index 0 the LoS path;
    ``arrival_angles`` is present only for the BS-to-surface link.
    """

    departure_angles: np.ndarray
    los_coefficient: complex
    nlos_variances: np.ndarray
    arrival_angles: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "departure_angles", np.asarray(self.departure_angles, float))
        object.__setattr__(self, "nlos_variances", np.asarray(self.nlos_variances, float))
        if self.arrival_angles is not None:
            object.__setattr__(self, "arrival_angles", np.asarray(self.arrival_angles, float))
            if self.arrival_angles.size != self.departure_angles.size:
                raise ValueError("arrival/departure angle counts differ")
        if self.departure_angles.size != self.nlos_variances.size + 1:
            raise ValueError("angle array must have length L+1")
        if np.any(self.nlos_variances < 0):
            raise ValueError("NLoS variances must be non-negative")

    @property
    def path_count(self) -> int:
        """Number of NLoS paths L."""
        return self.nlos_variances.size

    def to_dict(self) -> dict:
        d = {
            "departure_angles": self.departure_angles.tolist(),
            "los_coefficient": [self.los_coefficient.real, self.los_coefficient.imag],
            "nlos_variances": self.nlos_variances.tolist(),
        }
        if self.arrival_angles is not None:
            d["arrival_angles"] = self.arrival_angles.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LinkStatistics":
        re, im = d["los_coefficient"]
        return cls(
            departure_angles=np.asarray(d["departure_angles"], float),
            los_coefficient=complex(re, im),
            nlos_variances=np.asarray(d["nlos_variances"], float),
            arrival_angles=np.asarray(d["arrival_angles"], float) if "arrival_angles" in d else None,
        )


@dataclass(frozen=True)
class StatisticalCsi:
    """S-CSI for every link: BS-surface plus per-user surface and direct links."""

    bs_irs: LinkStatistics
    irs_user: tuple
    bs_user: tuple

    def __post_init__(self):
        if len(self.irs_user) != len(self.bs_user) or len(self.irs_user) < 1:
            raise ValueError("need matching per-user link statistics for K >= 1 users")
        if self.bs_irs.arrival_angles is None:
            raise ValueError("BS-surface link requires arrival angles")
        object.__setattr__(self, "irs_user", tuple(self.irs_user))
        object.__setattr__(self, "bs_user", tuple(self.bs_user))

    @property
    def n_users(self) -> int:
        return len(self.irs_user)

    def to_dict(self) -> dict:
        return {
            "bs_irs": self.bs_irs.to_dict(),
            "irs_user": [s.to_dict() for s in self.irs_user],
            "bs_user": [s.to_dict() for s in self.bs_user],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StatisticalCsi":
        return cls(
            bs_irs=LinkStatistics.from_dict(d["bs_irs"]),
            irs_user=tuple(LinkStatistics.from_dict(s) for s in d["irs_user"]),
            bs_user=tuple(LinkStatistics.from_dict(s) for s in d["bs_user"]),
        )


def path_loss_amplitude(distance: float, wavelength: float) -> float:
    """Free-space amplitude lam / (4 pi r)."""
    if distance <= 0:
        raise ValueError("coincident nodes: link distance must be positive")
    return wavelength / (4.0 * np.pi * distance)


def _los_coefficient(distance: float, wavelength: float) -> complex:
    amp = path_loss_amplitude(distance, wavelength)
    return amp * np.exp(-2j * np.pi * distance / wavelength)


def _link_stats(distance, l_paths, rng, wavelength, nlos_power_ratio, with_arrival):
    beta0 = _los_coefficient(distance, wavelength)
    dep = rng.uniform(ANGLE_LOW, ANGLE_HIGH, size=l_paths + 1)
    arr = rng.uniform(ANGLE_LOW, ANGLE_HIGH, size=l_paths + 1) if with_arrival else None
    if l_paths > 0:
        var = np.full(l_paths, nlos_power_ratio * abs(beta0) ** 2 / l_paths)
    else:
        var = np.zeros(0)
    return LinkStatistics(dep, beta0, var, arrival_angles=arr)


def sample_scsi(
    geometry: NodeGeometry,
    radio: RadioContext,
    l_bs_irs: int,
    l_irs_user: int,
    l_bs_user: int,
    rng: np.random.Generator,
    nlos_power_ratio: float = 1.0,
) -> StatisticalCsi:
    """Draw one S-CSI realization for the given scene.

    All AoAs/AoDs are uniform on [pi/6, 5pi/6]; LoS amplitudes follow
    lam/(4 pi r) with a deterministic propagation phase; each NLoS path gets
    an equal share of ``nlos_power_ratio`` times the LoS power.
    """
    lam = radio.wavelength
    bs_irs = _link_stats(geometry.bs_irs_distance(), l_bs_irs, rng, lam, nlos_power_ratio, True)
    irs_user = tuple(
        _link_stats(geometry.irs_user_distance(k), l_irs_user, rng, lam, nlos_power_ratio, False)
        for k in range(geometry.n_users)
    )
    bs_user = tuple(
        _link_stats(geometry.bs_user_distance(k), l_bs_user, rng, lam, nlos_power_ratio, False)
        for k in range(geometry.n_users)
    )
    return StatisticalCsi(bs_irs, irs_user, bs_user)


# ---------------------------------------------------------------------------
# instantaneous CSI


@dataclass(frozen=True)
class InstantaneousChannels:
    """One drawn realization of all channels: G (N x M), r_k (N,), h_k (M,)."""

    G: np.ndarray
    r: np.ndarray  # (K, N)
    h: np.ndarray  # (K, M)
    beta_bs_irs: np.ndarray
    beta_irs_user: tuple
    beta_bs_user: tuple

    @property
    def n_users(self) -> int:
        return self.r.shape[0]


def sample_path_gains(link: LinkStatistics, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw the path-response vector: fixed LoS entry plus CN(0, var) NLoS entries.

    With ``size`` given, returns a (size, L+1) batch.
    """
    l = link.path_count
    shape = (l,) if size is None else (size, l)
    scale = np.sqrt(link.nlos_variances / 2.0)
    nlos = rng.normal(scale=scale, size=shape) + 1j * rng.normal(scale=scale, size=shape)
    if size is None:
        return np.concatenate(([link.los_coefficient], nlos))
    out = np.empty((size, l + 1), complex)
    out[:, 0] = link.los_coefficient
    out[:, 1:] = nlos
    return out


def sample_icsi(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    rng: np.random.Generator,
) -> InstantaneousChannels:
    """Draw one I-CSI realization under the given antenna/surface configuration."""
    lam = radio.wavelength
    q, psi, phi = config.q, config.psi, config.phi

    g_r = receive_frm(layout, phi, scsi.bs_irs.arrival_angles, lam)
    g_t = transmit_frm(q, psi, scsi.bs_irs.departure_angles, lam)
    beta = sample_path_gains(scsi.bs_irs, rng)
    G = (g_r * beta) @ g_t.conj().T

    k_users = scsi.n_users
    r = np.empty((k_users, layout.n_elements), complex)
    h = np.empty((k_users, q.size), complex)
    beta_r = []
    beta_t = []
    for k in range(k_users):
        a_r = irs_user_frm(layout, phi, scsi.irs_user[k].departure_angles, lam)
        b_r = sample_path_gains(scsi.irs_user[k], rng)
        r[k] = a_r @ b_r
        a_t = bs_user_frm(q, psi, scsi.bs_user[k].departure_angles, lam)
        b_t = sample_path_gains(scsi.bs_user[k], rng)
        h[k] = a_t @ b_t
        beta_r.append(b_r)
        beta_t.append(b_t)
    return InstantaneousChannels(G, r, h, beta, tuple(beta_r), tuple(beta_t))


def effective_channel(h_k: np.ndarray, r_k: np.ndarray, G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Effective downlink channel h_k + G^H diag(v)^H r_k (column convention)."""
    return h_k + G.conj().T @ (np.conj(v) * r_k)


def sample_icsi_batch(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    n_samples: int,
    rng: np.random.Generator,
):
    """Draw a batch of I-CSI realizations as dense arrays.

    Returns ``(G, r, h)`` with shapes (T, N, M), (T, K, N), (T, K, M). The draws
    match ``n_samples`` independent channel realizations; per-sample ordering of
    the underlying Gaussian draws differs from repeated ``sample_icsi`` calls.
    """
    lam = radio.wavelength
    q, psi, phi = config.q, config.psi, config.phi
    k_users = scsi.n_users

    g_r = receive_frm(layout, phi, scsi.bs_irs.arrival_angles, lam)
    g_t = transmit_frm(q, psi, scsi.bs_irs.departure_angles, lam)
    beta = sample_path_gains(scsi.bs_irs, rng, size=n_samples)  # (T, L+1)
    G = np.einsum("nl,tl,ml->tnm", g_r, beta, g_t.conj(), optimize=True)

    r = np.empty((n_samples, k_users, layout.n_elements), complex)
    h = np.empty((n_samples, k_users, q.size), complex)
    for k in range(k_users):
        a_r = irs_user_frm(layout, phi, scsi.irs_user[k].departure_angles, lam)
        r[:, k, :] = sample_path_gains(scsi.irs_user[k], rng, size=n_samples) @ a_r.T
        a_t = bs_user_frm(q, psi, scsi.bs_user[k].departure_angles, lam)
        h[:, k, :] = sample_path_gains(scsi.bs_user[k], rng, size=n_samples) @ a_t.T
    return G, r, h


def effective_channel_batch(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    v: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``n_samples`` effective channels (T, K, M) under a fixed reflection v.

    Uses the factored form ``h_eff = A_t b_t + G_t diag(b)^H C_k b_r`` with the
    (L+1) x (L_r+1) matrix ``C_k = G_r^H diag(v)^H A_r`` precomputed per user, so
    the surface dimension never enters the per-sample work.
    """
    lam = radio.wavelength
    q, psi, phi = config.q, config.psi, config.phi
    k_users = scsi.n_users

    g_r = receive_frm(layout, phi, scsi.bs_irs.arrival_angles, lam)
    g_t = transmit_frm(q, psi, scsi.bs_irs.departure_angles, lam)
    beta = sample_path_gains(scsi.bs_irs, rng, size=n_samples)

    h_eff = np.empty((n_samples, k_users, q.size), complex)
    proj = g_r.conj().T * np.conj(v)  # (L+1, N) rows a_r^H diag(v)^H
    for k in range(k_users):
        a_r = irs_user_frm(layout, phi, scsi.irs_user[k].departure_angles, lam)
        c_k = proj @ a_r
        b_r = sample_path_gains(scsi.irs_user[k], rng, size=n_samples)
        mixed = np.conj(beta) * (b_r @ c_k.T)  # (T, L+1)
        a_t = bs_user_frm(q, psi, scsi.bs_user[k].departure_angles, lam)
        b_t = sample_path_gains(scsi.bs_user[k], rng, size=n_samples)
        h_eff[:, k, :] = b_t @ a_t.T + mixed @ g_t.T
    return h_eff
