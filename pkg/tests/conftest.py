import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def _report(number: int, checks: dict[str, bool], detail: str) -> bool:
        passed = all(checks.values())
        failed = [name for name, ok in checks.items() if not ok]
        line = detail if passed else f"{detail}; failed: {', '.join(failed)}"
        _RESULTS[number] = (passed, line)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {line}")
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_RESULTS):
        passed, line = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {line}")
