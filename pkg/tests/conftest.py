import numpy as np
import pytest

from grnndelay import _backend
from grnndelay.dataset import Dataset, DelaySample, NetworkCondition


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.load(request.param))
    return request.param


def make_dataset(rows):
    return Dataset(tuple(DelaySample(NetworkCondition(*r[:5]), r[5]) for r in rows))


def random_dataset(n, seed=0):
    rng = np.random.default_rng(seed)
    rows = [(rng.uniform(0.05, 0.9), rng.uniform(10, 500), rng.uniform(1, 8),
             int(rng.integers(1, 33)), int(rng.integers(0, 201)), rng.uniform(5, 60))
            for _ in range(n)]
    return make_dataset(rows)


@pytest.fixture
def small_ds():
    return make_dataset([
        (0.1, 50.0, 1.0, 2, 10, 8.0),
        (0.5, 100.0, 2.0, 4, 10, 12.0),
        (0.8, 300.0, 5.0, 16, 100, 60.0),
    ])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
