import pytest

from fmextreme import validate_counts

ACCEPTANCE_LINES = []


@pytest.fixture
def counts():
    return validate_counts


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
