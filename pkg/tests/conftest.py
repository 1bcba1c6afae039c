import numpy as np
import pytest

from cosparse.frames import tight_frame


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def desk_frame():
    """Tight 50 x 40 frame shared by the statistical tests."""
    return tight_frame(50, 40, np.random.default_rng(7), seed=7)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
