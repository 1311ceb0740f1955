"""Shared fixtures and the acceptance-line reporter.

Acceptance tests register one human-readable PASS/FAIL line each via the
``acceptance`` fixture; the lines are printed in a summary block at the
end of the pytest run so they are visible without -s.
"""

import pytest
from hypothesis import HealthCheck, settings

from knapea import KnapsackInstance, gen_section5

# compiled kernels can make a first example slow; never let hypothesis
# flag that as a deadline failure
settings.register_profile(
    "knapea",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("knapea")

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line for an acceptance criterion."""

    def record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def instance_a() -> KnapsackInstance:
    return gen_section5("A")


@pytest.fixture
def instance_b() -> KnapsackInstance:
    return gen_section5("B")


@pytest.fixture
def instance_c() -> KnapsackInstance:
    return gen_section5("C")
