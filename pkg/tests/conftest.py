"""Shared helpers: random measure generators and the acceptance summary hook."""
import numpy as np
import pytest

SEEDS = (0, 1, 2)

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def random_prob(rng: np.random.Generator, s: int, min_mass: float = 0.0) -> np.ndarray:
    """A random probability vector with every mass at least ``min_mass``."""
    if s * min_mass >= 1.0:
        raise ValueError("min_mass too large for the alphabet")
    p = rng.dirichlet(np.ones(s))
    return min_mass + (1.0 - s * min_mass) * p


@pytest.fixture(params=SEEDS)
def seed(request):
    return request.param


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
