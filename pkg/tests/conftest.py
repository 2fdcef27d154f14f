from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Collect a criterion result line for the end-of-run summary."""

    def record(result):
        _LINES.append(result.line())
        print(result.line())
        return result

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=lambda s: int(s.split()[1][1:])):
        terminalreporter.write_line(line)
    passed = sum(ln.startswith("PASS") for ln in _LINES)
    terminalreporter.write_line(f"{passed}/{len(_LINES)} criteria passed")
