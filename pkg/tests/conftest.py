import numpy as np
import pytest

from nwopt.problems import make_newsvendor

ACCEPTANCE_LINES = []


@pytest.fixture
def newsvendor():
    return make_newsvendor(1)


@pytest.fixture
def newsvendor_p2():
    return make_newsvendor(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
