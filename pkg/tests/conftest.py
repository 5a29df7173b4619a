import pytest

# (number, title, passed, elapsed seconds, limit seconds) per acceptance criterion
CRITERIA: list[tuple[int, str, bool, float, float]] = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, elapsed, limit in sorted(CRITERIA):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  ({elapsed:.2f}s, limit {limit:g}s)")


@pytest.fixture
def criteria_log():
    return CRITERIA
