import numpy as np
import pytest

from ecgamut.problems import ProblemInstance

ACCEPTANCE_LINES: list[str] = []


class CountingProblem:
    """Wraps a problem and counts every genome handed to the fitness function."""

    def __init__(self, inner: ProblemInstance) -> None:
        self.inner = inner
        self.calls = 0

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def evaluate_batch(self, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(bits)
        self.calls += bits.shape[0]
        return self.inner.evaluate_batch(bits)


@pytest.fixture
def counting():
    return CountingProblem


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
