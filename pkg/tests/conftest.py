import numpy as np
import pytest

from etmrs.analysis import NetworkScenario
from etmrs.battery import BatterySpec
from etmrs.channel import RadioParams, Topology, dbm_to_watts

N0 = dbm_to_watts(-90.0)

# acceptance verdicts, filled in by tests/test_acceptance.py
VERDICTS: dict[int, str] = {}

EIGHT_D = [5, 5.5, 6, 6, 6, 6, 6.5, 7]
EIGHT_CHI = [3e-6] * 6 + [4e-6] * 2


def radio_at(dbm, kappa=1.0, eta=0.5):
    return RadioParams(dbm_to_watts(dbm), N0, kappa, eta)


def eight_relay_scenario(dbm, L=200, d=EIGHT_D, chi=EIGHT_CHI, rounding="up"):
    spec = BatterySpec(2e-5, L, 1e-7)
    return NetworkScenario.from_topology(Topology(20.0, d), radio_at(dbm), spec, chi, rounding)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[k])
