import numpy as np
import pytest

from parsumi.core import ObservedMatrix, SparseCorruption


def random_problem(rng, m, n, frac=0.6, eps=1e-10, corrupt=0):
    """Random observations of a random matrix plus a random sparse E^k."""
    mask = rng.random((m, n)) < frac
    mask[0, 0] = True
    obs = ObservedMatrix.from_dense(rng.standard_normal((m, n)), mask, eps)
    ev = np.zeros(obs.support.size)
    if corrupt:
        idx = rng.choice(obs.support.size, size=min(corrupt, obs.support.size), replace=False)
        ev[idx] = rng.standard_normal(idx.size)
    E = SparseCorruption.from_values(obs.support, ev, obs.support.size, 1e6)
    return obs, E


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: long-running acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
