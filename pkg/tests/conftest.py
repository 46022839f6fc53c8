import pytest

_CRITERIA = []


@pytest.fixture
def report():
    """Record a one-line verdict for an acceptance criterion, then assert it."""

    def _report(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _CRITERIA.append((number, line))
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
