import numpy as np
import pytest

from cartpso.features import SegmentedCellImage


@pytest.fixture
def square_cell():
    """5x5 nucleus inside a 10x10 cell on a 16x16 constant raster."""
    nucleus = np.zeros((16, 16), bool)
    nucleus[5:10, 5:10] = True
    cell = np.zeros((16, 16), bool)
    cell[3:13, 3:13] = True
    return SegmentedCellImage(np.full((16, 16), 128, np.uint8), nucleus, cell)


@pytest.fixture
def textured_cell():
    from cartpso.synthetic import synthetic_cell

    return SegmentedCellImage(*synthetic_cell(seed=3, elongation=1.4))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Print and keep a one-line PASS/FAIL verdict for the terminal summary."""
    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record
