import warnings

import numpy as np
import pytest
from hypothesis import settings

from vbsvm.data import LabeledDataset, build_penalty_design
from vbsvm.errors import ConvergenceWarning
from vbsvm.simulate import SimSpec, simulate_logistic

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

# Lines recorded by the acceptance suite, echoed in the terminal summary so
# they survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_convergence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        yield


def sim_design(n=60, d=4, seed=0):
    ds, beta, u = simulate_logistic(SimSpec(n, d, seed))
    return ds, build_penalty_design(ds)


@pytest.fixture
def small_problem():
    return sim_design(60, 4, 11)


def random_masked(n, d, fraction, seed):
    from vbsvm.simulate import apply_mcar
    from vbsvm.distributions import make_rng

    ds, _, _ = simulate_logistic(SimSpec(n, d, seed))
    return apply_mcar(ds, fraction, make_rng(seed + 1))


def toy_dataset(D, y, mask=None):
    return LabeledDataset(np.asarray(y, dtype=float), np.asarray(D, dtype=float), mask=mask)
