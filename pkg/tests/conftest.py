import numpy as np
import pytest

from proxas.harness.synthetic import SyntheticSpec, gen_synthetic
from proxas.problem import DatasetInstance


def random_dataset(rng, n=30, d=10, density=0.6, scale=3.0):
    A = rng.standard_normal((n, d)) * (rng.random((n, d)) < density)
    A *= rng.uniform(0.5, scale, n)[:, None] / np.sqrt(d)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return DatasetInstance.from_dense(A, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_synthetic():
    return gen_synthetic(SyntheticSpec(n=60, d=20, seed=3))


@pytest.fixture(scope="session")
def medium_synthetic():
    return gen_synthetic(SyntheticSpec(n=200, d=50, seed=7))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
