import pytest

_LINES: dict[str, str] = {}


class AcceptanceRecorder:
    def record(self, key: str, passed: bool, detail: str) -> bool:
        _LINES[key] = f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_LINES[key])
        return passed


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(_LINES[key])
