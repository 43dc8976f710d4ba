import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fmm2d.evaluator import direct_solve  # noqa: E402
from fmm2d.generate import clustered_particles, uniform_particles  # noqa: E402


@pytest.fixture(scope="session")
def uniform_10k():
    pos, q = uniform_particles(10_000, seed=0)
    z = pos[:, 0] + 1j * pos[:, 1]
    return pos, q, direct_solve(z, q, "potential")


@pytest.fixture(scope="session")
def clustered_10k():
    return clustered_particles(10_000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
