import numpy as np
import pytest

from parvi.distributions import RngState
from parvi.model import GammaExpModel

# (criterion, passed, detail) tuples appended by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def ref_model():
    return GammaExpModel(3.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return RngState(20240611)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
