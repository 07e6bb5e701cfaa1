import re

import pytest

_LINES: list[tuple[int, str, str]] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        _LINES.append((int(re.match(r"\d+", criterion).group()), criterion, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_LINES):
        terminalreporter.write_line(line)
