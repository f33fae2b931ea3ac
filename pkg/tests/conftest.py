import numpy as np
import pytest

from iadmm.data_io import SyntheticSpec, synth_lrr
from iadmm.lrr import build_model

# Acceptance instance: seed 42, 100 x 100, rank 5, 5 sparse columns, sigma 0.01.
ACCEPTANCE_SPEC = SyntheticSpec(d=100, n=100, r=5, s_cols=5, sigma=0.01, seed=42)


@pytest.fixture(scope="session")
def acceptance_data():
    return synth_lrr(ACCEPTANCE_SPEC)


@pytest.fixture(scope="session")
def acceptance_model(acceptance_data):
    return build_model(acceptance_data.D, 0.01, 0.01, 5.0, "admm-mm")


@pytest.fixture(scope="session")
def small_model():
    D = np.random.default_rng(7).standard_normal((12, 15))
    return build_model(D, 0.1, 0.1, 5.0, "admm-mm")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    from oracles import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
