import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(ok), detail)
        print(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
