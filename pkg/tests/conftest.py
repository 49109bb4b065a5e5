import numpy as np
import pytest

from singspec import assemble, box_mesh, euclidean, interval_mesh


@pytest.fixture(scope="session")
def two_cell_interval():
    return interval_mesh(0.0, 1.0, 2)


@pytest.fixture(scope="session")
def unit_square():
    return box_mesh((0.0, 0.0), (1.0, 1.0), (8, 8))


@pytest.fixture(scope="session")
def square_dirichlet_ops():
    return assemble(box_mesh((0.0, 0.0), (1.0, 1.0), (24, 24)), euclidean(2),
                    dirichlet_boundary=True)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
