import numpy as np
import pytest

from netsync.dynamics import SystemModel

ACCEPTANCE_LINES = []


class LinearSystem(SystemModel):
    """``f(x) = A x`` with a constant mismatch channel."""

    def __init__(self, A, G=None):
        self.A = np.asarray(A, float)
        self.state_dim = self.A.shape[0]
        self.Gm = np.eye(self.state_dim) if G is None else np.asarray(G, float)
        self.mismatch_dim = self.Gm.shape[1]

    def f(self, x):
        return self.A @ x

    def G(self, x):
        return self.Gm.copy()


def zero_system(n=3, G=None):
    """``f = 0``; ``G`` defaults to zero as well."""
    return LinearSystem(np.zeros((n, n)), np.zeros((n, n)) if G is None else G)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
