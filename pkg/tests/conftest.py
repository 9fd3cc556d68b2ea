import pytest

_ACCEPTANCE = {}
CRITERIA = 13


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion, then assert it."""

    def record(number, title, checks):
        failed = [label for label, ok in checks if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = "; ".join(failed) if failed else f"{len(checks)} checks"
        _ACCEPTANCE[number] = f"[{status}] criterion {number:2d}: {title} ({detail})"
        print(_ACCEPTANCE[number])
        assert not failed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, CRITERIA + 1):
        terminalreporter.write_line(_ACCEPTANCE.get(n, f"[FAIL] criterion {n:2d}: did not run to completion"))
