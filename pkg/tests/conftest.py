import numpy as np
import pytest

from mechdesign.domains import SgaParams, sga_equilibrium_oracle, sga_game

# Acceptance lines collected by tests/test_acceptance.py, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sga_half():
    """SGA(1/2, 0) and its known equilibrium (2/3)t."""
    return sga_game(SgaParams(0.5, 0.0)), sga_equilibrium_oracle(0.5, 0.0)
