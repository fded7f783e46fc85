import pytest

from fnls_lab.grid import make_grid
from fnls_lab.nonlinearity import EquationSpec

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    def _report(criterion: int, title: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:2d} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 8.0, 128)


@pytest.fixture(scope="session")
def grid2_small():
    return make_grid(2, 4.0, 64)


@pytest.fixture(scope="session")
def power_spec():
    return EquationSpec("power", 1.5, 2, alpha=1.0)


@pytest.fixture(scope="session")
def hartree_spec():
    return EquationSpec("hartree", 1.5, 2, nu=1.0)
