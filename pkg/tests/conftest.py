import numpy as np
import pytest

from aeqipm import LOProblem


@pytest.fixture
def hand_lp():
    """``min x1 + 2 x2  s.t.  x1 + x2 = 1, x >= 0``; optimum x = (1, 0), y = 1."""
    return LOProblem(np.array([[1.0, 1.0]]), np.array([1.0]), np.array([1.0, 2.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
