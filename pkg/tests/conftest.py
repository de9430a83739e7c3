import sys

import numpy as np
import pytest

from movingbath.bath import BathParams
from movingbath.system import LevelSystem, battery_three_level, delta_three_level, rate_matrix

FIG_BETAS = np.geomspace(0.05, 50.0, 40)
FIG_US = (0.2, 0.6, 0.99)


def random_level_system(rng, n=4):
    e = np.concatenate([[0.0], np.cumsum(rng.uniform(0.3, 2.0, n - 1))])
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = a + a.conj().T
    np.fill_diagonal(a, 0.0)
    return LevelSystem(e, a)


@pytest.fixture
def delta():
    return delta_three_level()


@pytest.fixture
def battery():
    return battery_three_level()


@pytest.fixture
def delta_rates(delta):
    return rate_matrix(delta, BathParams(1.0, 0.6, 0.1))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)
