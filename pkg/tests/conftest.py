import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rirs6dma import rng as rngmod
from rirs6dma.channel import LinkStatistics, StatisticalCsi, sample_scsi
from rirs6dma.geometry import IrsLayout, NodeGeometry, RadioContext, sample_user_positions

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

# one line per acceptance criterion, echoed after the run (outside capture)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


RADIO = RadioContext(6.0e9)


@pytest.fixture(scope="session")
def radio():
    return RADIO


def make_scene(seed: int, k_users: int = 1, l_paths: int = 3, radio: RadioContext = RADIO):
    """Small random scene with the reference geometry."""
    users = sample_user_positions((4.0, -18.0, 0.0), 3.0, k_users, rngmod.stream(seed, "scene"))
    geometry = NodeGeometry((1.0, 1.0, 0.0), (0.0, 0.0, 0.0), users, (4.0, -18.0, 0.0), 3.0)
    scsi = sample_scsi(geometry, radio, l_paths, l_paths, l_paths, rngmod.stream(seed, "scsi"))
    return geometry, scsi


def make_link(departure, los, variances, arrival=None) -> LinkStatistics:
    return LinkStatistics(
        departure_angles=np.asarray(departure, float),
        los_coefficient=complex(los),
        nlos_variances=np.asarray(variances, float),
        arrival_angles=None if arrival is None else np.asarray(arrival, float),
    )


def make_scsi(bs_irs: LinkStatistics, irs_user, bs_user) -> StatisticalCsi:
    if isinstance(irs_user, LinkStatistics):
        irs_user = (irs_user,)
    if isinstance(bs_user, LinkStatistics):
        bs_user = (bs_user,)
    return StatisticalCsi(bs_irs, tuple(irs_user), tuple(bs_user))


@pytest.fixture()
def small_layout():
    return IrsLayout(4, 4, RADIO.min_spacing)
