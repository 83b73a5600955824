import numpy as np
import pytest

from dksd.rng import make_rng

FD_STEP = 1e-5


@pytest.fixture
def rng():
    return make_rng(20240601)


def random_theta(rng, d, size, margin=0.1):
    """Interior angles: polar in [margin, pi - margin], azimuth in [0, 2 pi)."""
    polar = rng.uniform(margin, np.pi - margin, (size, d - 2))
    az = rng.uniform(0.0, 2.0 * np.pi, (size, 1))
    return np.concatenate([polar, az], axis=1)


def central_diff(fn, theta, h=FD_STEP):
    """Central-difference gradient of a scalar function of one angle vector."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty(theta.size)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (fn(theta + e) - fn(theta - e)) / (2.0 * h)
    return grad


def pytest_terminal_summary(terminalreporter):
    from checks import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
