import functools

import numpy as np
import pytest

from dpnls.fields import Field, LineGrid
from dpnls.model import ModelParams

TRIPLES = [(3, 4.0, 2.0), (1, 6.0, 5.0), (3, 3.0, 2.0)]


@pytest.fixture(params=TRIPLES, ids=lambda t: "d{}_p{:g}_{:g}".format(*t))
def params(request):
    return ModelParams(*request.param)


@pytest.fixture
def p342():
    return ModelParams(3, 4.0, 2.0)


@pytest.fixture
def p165():
    return ModelParams(1, 6.0, 5.0)


@pytest.fixture
def line_grid():
    return LineGrid(1024, 80.0)


def gaussian(grid, amp=1.0, width=1.5, centre=0.0, k=0.0):
    x = grid.nodes
    return Field(grid, amp * np.exp(-0.5 * ((x - centre) / width) ** 2 + 1j * k * x))


@functools.lru_cache(maxsize=None)
def critical(triple):
    """Minimal-mass and zero-energy ground-state data, cached per session."""
    from dpnls.groundstate import critical_mass, minimal_mass

    p = ModelParams(*triple)
    mm = minimal_mass(p)
    cm = critical_mass(p, omega_c=mm["omega_c"])
    return mm, cm


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
