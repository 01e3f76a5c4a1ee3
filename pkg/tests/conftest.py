import math

import numpy as np
import pytest

from resotrap.model import SpectrumSpec, build_model
from resotrap.sweep import run_sweep

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}

UNIFORM_GRID = np.round(np.arange(0.01, 2.0 + 1e-9, 0.005), 10)


@pytest.fixture(scope="session")
def ideal50():
    return build_model(SpectrumSpec("ideal", 50))


@pytest.fixture(scope="session")
def ideal_sweep(ideal50):
    return run_sweep(ideal50, UNIFORM_GRID)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
