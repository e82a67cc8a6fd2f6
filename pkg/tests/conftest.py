import pytest

ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Tests call record(label, passed, detail); lines are printed after the run."""

    def record(label: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append((label, bool(passed), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda x: int(x[0].split()[0])):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {label}" + (f"  ({detail})" if detail else ""))
