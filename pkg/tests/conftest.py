import pytest

from rrquery import Instance, QueryOracle


@pytest.fixture
def identical4():
    """Two agents, both valuing items 1..4 at 4, 3, 2, 1."""
    return Instance.from_rows([[4, 3, 2, 1], [4, 3, 2, 1]])


@pytest.fixture
def oracle_for():
    def make(rows, noise=None):
        return QueryOracle(Instance.from_rows(rows), noise)

    return make


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
