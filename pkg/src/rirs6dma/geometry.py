"""Scene geometry, array layouts, and the long-timescale configuration variables.

Conventions: distances in meters, angles in radians, the propagation speed is
3e8 m/s so a 6 GHz carrier has wavelength exactly 0.05 m. Antenna coordinates
``q`` and IRS element coordinates ``x`` are scalar offsets along the respective
array axes, measured from the array center.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3.0e8

__all__ = [
    "SPEED_OF_LIGHT",
    "RadioContext",
    "NodeGeometry",
    "IrsLayout",
    "ArraySurfaceConfig",
    "ula_positions",
    "sample_user_positions",
]


@dataclass(frozen=True)
class RadioContext:
    """Carrier frequency and derived spacing constants."""

    carrier_hz: float

    def __post_init__(self):
        if self.carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def min_spacing(self) -> float:
        """Half-wavelength minimum antenna spacing."""
        return self.wavelength / 2.0


@dataclass(frozen=True)
class NodeGeometry:
    """Positions of the BS, the reflecting surface, and the users (3-vectors)."""

    bs_position: np.ndarray
    irs_position: np.ndarray
    user_positions: np.ndarray  # (K, 3)
    user_center: np.ndarray
    user_radius: float

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, float))
        object.__setattr__(self, "irs_position", np.asarray(self.irs_position, float))
        object.__setattr__(self, "user_positions", np.atleast_2d(np.asarray(self.user_positions, float)))
        object.__setattr__(self, "user_center", np.asarray(self.user_center, float))
        d = np.linalg.norm(self.user_positions - self.user_center, axis=1)
        if np.any(d > self.user_radius * (1 + 1e-9)):
            raise ValueError("user positions must lie inside the configured disk")

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def bs_irs_distance(self) -> float:
        return float(np.linalg.norm(self.bs_position - self.irs_position))

    def irs_user_distance(self, k: int) -> float:
        return float(np.linalg.norm(self.irs_position - self.user_positions[k]))

    def bs_user_distance(self, k: int) -> float:
        return float(np.linalg.norm(self.bs_position - self.user_positions[k]))


def sample_user_positions(center, radius: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw K user positions uniformly over a disk in the x-y plane."""
    center = np.asarray(center, float)
    r = radius * np.sqrt(rng.uniform(size=k))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=k)
    pos = np.tile(center, (k, 1))
    pos[:, 0] += r * np.cos(theta)
    pos[:, 1] += r * np.sin(theta)
    return pos


@dataclass(frozen=True)
class IrsLayout:
    """Planar reflecting array; the response depends on the x-coordinates only.

    The grid holds ``rows * cols`` elements; the ``cols`` distinct x-coordinates
    start at the surface origin with pitch ``spacing``, and every column is
    repeated ``rows`` times. The origin choice only shifts a common phase,
    which the reflection vector absorbs.
    """

    rows: int
    cols: int
    spacing: float
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid shape must be positive")
        cols_x = np.arange(self.cols) * self.spacing
        object.__setattr__(self, "x", np.repeat(cols_x, self.rows))
        self.x.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


def ula_positions(m: int, spacing: float) -> np.ndarray:
    """Centered uniform linear array with the given element spacing."""
    return (np.arange(m) - (m - 1) / 2.0) * spacing


@dataclass(frozen=True)
class ArraySurfaceConfig:
    """Long-timescale decision variables: antenna positions and both rotations."""

    q: np.ndarray
    psi: float
    phi: float
    q_bounds: tuple[float, float]
    psi_bounds: tuple[float, float]
    phi_bounds: tuple[float, float]
    min_spacing: float

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, float))
        self.q.setflags(write=False)
        self.validate()

    def validate(self):
        q_min, q_max = self.q_bounds
        tol = 1e-9 * max(1.0, abs(q_max - q_min))
        if np.any(self.q < q_min - tol) or np.any(self.q > q_max + tol):
            raise ValueError("antenna positions outside the movement region")
        if self.q.size > 1:
            gaps = np.diff(np.sort(self.q))
            if np.min(gaps) < self.min_spacing - 1e-9:
                raise ValueError("minimum antenna spacing violated")
        if not (self.psi_bounds[0] - 1e-12 <= self.psi <= self.psi_bounds[1] + 1e-12):
            raise ValueError("6DMA rotation outside its allowed region")
        if not (self.phi_bounds[0] - 1e-12 <= self.phi <= self.phi_bounds[1] + 1e-12):
            raise ValueError("IRS rotation outside its allowed region")

    @property
    def n_antennas(self) -> int:
        return self.q.size

    @property
    def aperture(self) -> float:
        return self.q_bounds[1] - self.q_bounds[0]
