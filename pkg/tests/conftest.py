import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """record(number, ok, detail) stores one summary line for the acceptance report."""

    def record(number: int, ok: bool, detail: str) -> None:
        _LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_LINES[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
