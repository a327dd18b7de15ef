import math

import numpy as np
import pytest

from idealframe.core import GravParams
from idealframe.forces import ForceConfig, MoonParams

_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one acceptance line; the table is echoed in the terminal summary."""

    def _report(line):
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_cfg():
    # internal-unit force model with perturbations large enough to matter
    moon = MoonParams(GMm=0.01, am=8.0, nm=0.05, inclination=0.4, raan=0.3, phase0=1.0)
    return ForceConfig(GravParams(GM=1.0, J2=1e-3, Re=0.3), True, True, moon)


@pytest.fixture
def kepler_cfg():
    return ForceConfig(GravParams(GM=1.0))


def random_bound_state(rng, GM=1.0):
    """A random elliptic state with |x| near 1 and a well-defined plane."""
    while True:
        x = rng.normal(size=3)
        x *= rng.uniform(0.5, 1.5) / np.linalg.norm(x)
        X = rng.normal(size=3) * 0.6
        r = np.linalg.norm(x)
        if X @ X < 1.8 * GM / r and np.linalg.norm(np.cross(x, X)) > 0.1:
            return x, X


def circular_state(GM=1.0, r=1.0):
    return np.array([r, 0.0, 0.0]), np.array([0.0, math.sqrt(GM / r), 0.0])
