import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_AC_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def _report(ac, ok, detail):
        line = f"{ac} {'PASS' if ok else 'FAIL'} {detail}"
        _AC_LINES.append(line)
        print(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if _AC_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _AC_LINES:
            terminalreporter.write_line(line)
