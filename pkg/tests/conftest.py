import numpy as np
import pytest

from nystrom_erm.data import Dataset

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blobs(rng):
    """Two shifted Gaussian clouds in R^5, 120 points."""
    X = np.vstack([rng.normal(-1.0, 1.0, (60, 5)), rng.normal(1.0, 1.0, (60, 5))])
    y = np.r_[-np.ones(60), np.ones(60)]
    return Dataset(X, y, "blobs")


def random_psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank))
    return scale * (A @ A.T) / rank


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, line = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key:>2}: {line}")
