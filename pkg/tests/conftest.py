import numpy as np
import pytest

from rydfilter.atom_model import AtomRates, SchemeConfig, excitation_linewidth
from rydfilter.geometry import uniform_blockade_geometry
from rydfilter.mcwf import SimulationConfig
from rydfilter.pulses import PulseSchedule

RESONANT = PulseSchedule(5.0, 30.0, 0.5, 1.5, 0.5, 1.5)


def make_config(n, rates=None, schedule=RESONANT, delta=None, points=21, **kw):
    rates = rates or SchemeConfig("A").rates()
    if delta is None:
        w = excitation_linewidth(schedule.omega_ge_peak, schedule.omega_er_level, rates.gamma_e_total)
        delta = 10.0 * w
    times = tuple(np.linspace(0.0, schedule.total_duration, points))
    return SimulationConfig(n, rates, schedule, uniform_blockade_geometry(n, delta), times, **kw)


@pytest.fixture
def scheme_a():
    return SchemeConfig("A").rates()


@pytest.fixture
def no_decay():
    return AtomRates(0.0, 0.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
