import sys

import numpy as np
import pytest
from numba import njit

from limitmeasure.corpus import get_system
from limitmeasure.systems import make_system


@njit(cache=True)
def _neg(x):
    return -x


@njit(cache=True)
def _neg_first(x):
    out = np.zeros_like(x)
    out[0] = -x[0]
    return out


@pytest.fixture(scope="session")
def linear():
    """``b(x) = -x`` in the plane with identity diffusion."""
    return make_system("linear", 2, _neg, 10.0)


@pytest.fixture(scope="session")
def shear():
    """``b(x) = (-x1, 0)``."""
    return make_system("shear", 2, _neg_first, 10.0)


@pytest.fixture(scope="session")
def prnot():
    return get_system("prnot")


@pytest.fixture(scope="session")
def closed_v1():
    return get_system("closed_orbit_v1")


@pytest.fixture(scope="session")
def closed_v2():
    return get_system("closed_orbit_v2")


@pytest.fixture(scope="session")
def dw2():
    return get_system("gradient_dw2")


@pytest.fixture(scope="session")
def two_cycles():
    return get_system("two_cycles")


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])
