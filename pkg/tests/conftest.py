import math

import numpy as np
import pytest

from nuqw import CoinField, CoinSpec, Frame, WalkerState

PI = math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, half_width, support=2):
    """Random normalised state supported on ``|x| <= support``."""
    amp = np.zeros((2 * half_width + 1, 2), complex)
    lo, hi = half_width - support, half_width + support + 1
    amp[lo:hi] = rng.normal(size=(hi - lo, 2)) + 1j * rng.normal(size=(hi - lo, 2))
    amp /= np.linalg.norm(amp)
    return WalkerState(amp)


def random_field(rng, half_width):
    n = 2 * half_width + 1
    return CoinField.explicit(rng.uniform(-PI, PI, n), rng.uniform(-PI, PI, n))


def random_frame(rng):
    return Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME


def homogeneous(theta1, theta2, half_width):
    return CoinField.homogeneous(CoinSpec(theta1, theta2), half_width)


# acceptance criteria append (number, passed, detail) here; printed at session end
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
