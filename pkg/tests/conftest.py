import itertools

import numpy as np
import pytest

from mars_ising import io
from mars_ising.model import IsingProblem

# lines collected by the acceptance tests and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def enumerate_energies(J, h=None):
    """Every configuration and its energy by the plain double loop; independent of the library."""
    n = len(J)
    h = np.zeros(n) if h is None else h
    rows = []
    for conf in itertools.product((-1, 1), repeat=n):
        e = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    e += J[i][j] * conf[i] * conf[j]
            e += h[i] * conf[i]
        rows.append((e, conf))
    return rows


def random_symmetric(rng, n, integer=False, density=1.0):
    J = rng.integers(-3, 4, (n, n)).astype(float) if integer else rng.standard_normal((n, n))
    J = np.triu(J, 1) * (rng.random((n, n)) < density)
    return J + J.T


@pytest.fixture
def ferro_pair():
    return IsingProblem(np.array([[0.0, -1.0], [-1.0, 0.0]]))


@pytest.fixture
def triangle():
    return IsingProblem.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])


@pytest.fixture(scope="session")
def sk12():
    return io.generate_sk(12, 5)


GSET_ENV = "MARS_ISING_GSET_DIR"


def find_gset(name):
    """Path of a G-set file from ``$MARS_ISING_GSET_DIR`` or tests/data, or None."""
    from pathlib import Path
    import os

    dirs = [os.environ.get(GSET_ENV), Path(__file__).parent / "data"]
    for d in filter(None, dirs):
        for candidate in (Path(d) / name, Path(d) / f"{name}.txt"):
            if candidate.is_file():
                return candidate
    return None
