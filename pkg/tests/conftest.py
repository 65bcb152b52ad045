import numpy as np
import pytest

from descobs.benchmark import circuit_ground_truth
from descobs.harness import make_config, simulate

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])


@pytest.fixture(scope="session")
def acceptance(request):
    """``acceptance(n, title, passed, detail)`` records one criterion line."""
    store = request.config.stash[_ACCEPTANCE]

    def record(n, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {n:2d}: {title} -- {detail}"
        store[n] = line
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def circuit_run():
    return simulate(make_config("circuit-bobtsov"))


@pytest.fixture(scope="session")
def circuit_run_half_step():
    return simulate(make_config("circuit-bobtsov", step=5e-4))


@pytest.fixture(scope="session")
def circuit_truth():
    return circuit_ground_truth(0.0, 30.0, 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
