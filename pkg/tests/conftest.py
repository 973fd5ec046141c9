import pytest

_lines = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    def add(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _lines.append(line)
        print(line)
        return passed
    return add


def pytest_terminal_summary(terminalreporter):
    if _lines:
        terminalreporter.section("acceptance")
        for line in sorted(_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
