import numpy as np
import pytest

from riskmpc.geometry import ArcPath, Configuration

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def case_path():
    return ArcPath(Configuration(65.0, 5.0, 0.0), 0.003, -95.0, 0.0)


@pytest.fixture
def straight_path():
    return ArcPath(Configuration(0.0, 0.0, 0.0), 0.0, -100.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
