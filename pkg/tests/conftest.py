"""Shared pytest plumbing: the acceptance suite records one PASS/FAIL line
per criterion and this hook replays them as a summary block at the end of the
run (they would otherwise be swallowed by pytest's output capture)."""

import pytest

_CRITERION_LINES: list[tuple[int, str]] = []


def _record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'} {title}: {detail}"
    _CRITERION_LINES.append((number, line))
    print(line)


@pytest.fixture
def criterion():
    """Callable ``criterion(number, title, passed, detail)`` used by the
    acceptance tests to log a one-line verdict per criterion."""
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERION_LINES):
        terminalreporter.write_line(line)
