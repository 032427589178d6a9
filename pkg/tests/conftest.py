import sys
from pathlib import Path

import numpy as np
import pytest

from gradflow_rom import DGSpace, assemble_operators, build_mesh

sys.path.insert(0, str(Path(__file__).parent))


def make_ops(domain=(0, 1, 0, 1), h=0.25, bc="neumann", sigma=18.0):
    return assemble_operators(DGSpace(build_mesh(domain, h, bc), sigma=sigma))


@pytest.fixture(scope="session")
def small_ops():
    return make_ops(h=0.25)


@pytest.fixture(scope="session")
def small_periodic_ops():
    return make_ops(domain=(0, 2, 0, 1), h=0.25, bc="periodic")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
