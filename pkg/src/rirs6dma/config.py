"""Experiment configuration: physical scene, algorithm knobs, file formats.

Defaults reproduce the reference setup (10 antennas, a 20x10 reflecting grid,
6 GHz carrier, 5 NLoS paths per link, 4 users, 30 dBm budget, -40 dBm noise,
DE with 50 individuals and 50 generations). Configs load from JSON or INI-style
``key = value`` files; values given on the command line override file values.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from .geometry import RadioContext

__all__ = ["ExperimentConfig", "dbm_to_watts", "watts_to_dbm", "DESK_OVERRIDES"]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(watts) + 30.0


_PI6 = math.pi / 6.0

# reduced problem size for quick runs and the acceptance suite
DESK_OVERRIDES = {
    "m_antennas": 6,
    "irs_rows": 8,
    "irs_cols": 4,
    "n_users": 3,
    "l_bs_irs": 3,
    "l_irs_user": 3,
    "l_bs_user": 3,
    "ssca_batch": 20,
    "eval_draws": 200,
    "psi_grid": 21,
    "phi_grid": 21,
    "outer_population": 8,
    "outer_generations": 8,
    "outer_eval_draws": 100,
    "sdp_de_max_iter": 120,
    "n_seeds": 10,
}


@dataclass(frozen=True)
class ExperimentConfig:
    # scene
    m_antennas: int = 10
    irs_rows: int = 20
    irs_cols: int = 10
    n_users: int = 4
    carrier_hz: float = 6.0e9
    l_bs_irs: int = 5
    l_irs_user: int = 5
    l_bs_user: int = 5
    p_t_dbm: float = 30.0
    noise_dbm: float = -40.0
    aperture_factor: float = 3.0
    psi_min: float = -_PI6
    psi_max: float = _PI6
    phi_min: float = -_PI6
    phi_max: float = _PI6
    bs_position: tuple = (1.0, 1.0, 0.0)
    irs_position: tuple = (0.0, 0.0, 0.0)
    user_center: tuple = (4.0, -18.0, 0.0)
    user_radius: float = 3.0
    nlos_power_ratio: float = 1.0
    # differential evolution (positions; outer_* applies to the joint search)
    de_population: int = 50
    de_generations: int = 50
    de_mutation: float = 0.6
    de_crossover: float = 0.9
    de_penalty: float = 1000.0
    outer_population: int | None = None
    outer_generations: int | None = None
    # stochastic surrogate loop
    ssca_batch: int = 50
    ssca_tau: float = 0.015
    ssca_max_iter: int = 300
    ssca_window: int = 10
    ssca_rel_tol: float = 1e-3
    ssca_warm_start: bool = False
    outer_eval_draws: int | None = None
    # per-sample beamforming
    wmmse_tol: float = 1e-4
    wmmse_max_iter: int = 100
    # reflection relaxation
    sdp_tol: float = 1e-6
    sdp_max_iter: int = 5000
    sdp_de_max_iter: int = 400
    n_randomizations: int = 100
    # rotation scans
    psi_grid: int = 61
    phi_grid: int = 61
    # evaluation
    eval_draws: int = 500
    n_seeds: int = 10
    # run control
    seed: int = 0
    threads: int = 1

    # ------------------------------------------------------------------
    # derived quantities

    @property
    def p_t_watts(self) -> float:
        return dbm_to_watts(self.p_t_dbm)

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def n_elements(self) -> int:
        return self.irs_rows * self.irs_cols

    def radio(self) -> RadioContext:
        return RadioContext(self.carrier_hz)

    def q_bounds(self) -> tuple[float, float]:
        half = self.aperture_factor * (self.m_antennas - 1) * self.radio().min_spacing / 2.0
        return (-half, half)

    def psi_bounds(self) -> tuple[float, float]:
        return (self.psi_min, self.psi_max)

    def phi_bounds(self) -> tuple[float, float]:
        return (self.phi_min, self.phi_max)

    @property
    def outer_pop(self) -> int:
        return self.de_population if self.outer_population is None else self.outer_population

    @property
    def outer_gens(self) -> int:
        return self.de_generations if self.outer_generations is None else self.outer_generations

    # ------------------------------------------------------------------
    # construction / serialization

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def desk(self) -> "ExperimentConfig":
        return self.replace(**DESK_OVERRIDES)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("bs_position", "irs_position", "user_center"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in d.items():
            if key not in fields:
                raise KeyError(f"unknown config key: {key}")
            kw[key] = _coerce(fields[key], value)
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Load JSON (flat object) or INI (any sections, keys matching fields)."""
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            return cls.from_dict(json.loads(text))
        parser = configparser.ConfigParser()
        parser.read_string(text)
        flat: dict = {}
        for section in parser.sections():
            for key, value in parser.items(section):
                flat[key] = value
        return cls.from_dict(flat)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_overrides(self, pairs) -> "ExperimentConfig":
        """Apply ``key=value`` override strings."""
        d = self.to_dict()
        fields = {f.name: f for f in dataclasses.fields(self)}
        for pair in pairs:
            key, _, value = pair.partition("=")
            key = key.strip()
            if key not in fields:
                raise KeyError(f"unknown config key: {key}")
            d[key] = value.strip()
        return self.from_dict(d)


def _coerce(field: dataclasses.Field, value):
    if value is None:
        return None
    name = field.name
    if name in ("bs_position", "irs_position", "user_center"):
        if isinstance(value, str):
            value = [float(x) for x in value.replace("(", "").replace(")", "").split(",")]
        return tuple(float(x) for x in value)
    if name in ("outer_population", "outer_generations", "outer_eval_draws"):
        if isinstance(value, str) and value.lower() in ("", "none"):
            return None
        return int(value)
    ftype = field.type
    if isinstance(value, str):
        if ftype.startswith("bool") or isinstance(field.default, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(field.default, int) and not isinstance(field.default, bool):
            return int(value)
        if isinstance(field.default, float):
            return float(value)
        return value
    if isinstance(field.default, bool):
        return bool(value)
    if isinstance(field.default, int) and not isinstance(value, bool):
        return int(value)
    if isinstance(field.default, float):
        return float(value)
    return value
