import math

import pytest

from bectransport.core import TrapConfig
from bectransport.groundstate import solve_ground_state

OMEGA0 = 2 * math.pi * 50.0
D = 1.6e-3


@pytest.fixture(scope="session")
def cfg():
    return TrapConfig.from_g1_over_hbar(0.05)


@pytest.fixture(scope="session")
def ideal_cfg():
    return TrapConfig.from_g1_over_hbar(0.0)


@pytest.fixture(scope="session")
def ground(cfg):
    return solve_ground_state(cfg)


@pytest.fixture(scope="session")
def ideal_ground(ideal_cfg):
    return solve_ground_state(ideal_cfg)


@pytest.fixture(scope="session")
def grounds():
    """Ground states for the four couplings g1/hbar in m/s."""
    return {gh: (TrapConfig.from_g1_over_hbar(gh), solve_ground_state(TrapConfig.from_g1_over_hbar(gh)))
            for gh in (0.0, 0.05, 0.1, 0.2)}


# one line per acceptance criterion, appended by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
