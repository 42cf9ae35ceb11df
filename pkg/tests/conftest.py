import numpy as np
import pytest

from cropchange.grid import ClassGrid, GridHeader

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def header():
    return GridHeader(ncols=6, nrows=4, xll=39.0, yll=13.0, cellsize=0.001, nodata=-9999)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def class_grid(cells, cellsize=0.001, xll=39.0, yll=13.0, nodata=-9999):
    cells = np.asarray(cells)
    h = GridHeader(cells.shape[1], cells.shape[0], xll, yll, cellsize, nodata)
    return ClassGrid(h, cells)
