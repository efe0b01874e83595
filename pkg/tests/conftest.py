import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def snapping():
    from quasidiff.gallery import snapping_out
    return snapping_out(2)


@pytest.fixture
def walk():
    from quasidiff.gallery import random_walk
    return random_walk((0, 1, 3))
