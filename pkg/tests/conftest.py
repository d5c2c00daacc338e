import pytest

# (number, title, passed, detail) recorded by the acceptance suite
ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f" ({detail})" if detail else ""))
