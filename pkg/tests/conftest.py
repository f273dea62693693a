from __future__ import annotations

import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the verdict of one acceptance criterion; printed at the end of the session."""

    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (passed, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
