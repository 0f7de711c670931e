import numpy as np
import pytest

from spikelab.ansatz import ModelParams, Pipeline, eval_error_terms
from spikelab.domain import Resolution
from spikelab.groundstate import default_radial_grid, solve_ground_state
from spikelab.potentials import PotentialSpec

COARSE = Resolution(fast_h=0.25, fast_margin=12.0, slow_growth=0.05, radial_h=0.02)

# verdict lines of the acceptance suite, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def coarse():
    return COARSE


@pytest.fixture(scope="session")
def coarse_pipeline():
    return Pipeline(ModelParams(eps=0.1), COARSE)


@pytest.fixture(scope="session")
def coarse_bundle(coarse_pipeline):
    return coarse_pipeline.ansatz(0.1)


@pytest.fixture(scope="session")
def coarse_errors(coarse_bundle):
    return eval_error_terms(coarse_bundle)


@pytest.fixture(scope="session")
def unit_ground_states():
    """Unit-parameter ground states for N = 1, 2, 3."""
    one = PotentialSpec.constant(1.0)
    return {N: solve_ground_state(one, 1.0, grid=default_radial_grid(1.0, N)) for N in (1, 2, 3)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
