import numpy as np
import pytest

from income_circulation import validate

F_EX = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
# agent 1 keeps half of its wealth, column renormalized
F_EX_SAVER = [[0.5, 1, 0], [0, 0, 1], [0.5, 0, 0]]


@pytest.fixture
def fex():
    return validate(F_EX)


@pytest.fixture
def fex_saver():
    return validate(F_EX_SAVER)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip("."))):
            terminalreporter.write_line(line)
