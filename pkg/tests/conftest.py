import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))
# Keep the suite single-process; the fan-out path has its own test.
os.environ.setdefault("FUCIK_THREADS", "1")

from fucik import Problem, ToleranceConfig, constant  # noqa: E402
from fucik.tables import DEFAULT_M, DEFAULT_N  # noqa: E402


@pytest.fixture(scope="session")
def reference():
    return Problem.from_text(DEFAULT_M, DEFAULT_N, L=1.0)


@pytest.fixture(scope="session")
def unit():
    return Problem(L=1.0, m=constant(1.0), n=constant(1.0))


@pytest.fixture(scope="session")
def tight():
    return ToleranceConfig(bisection_eps=1e-9)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Collects one status line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
