import numpy as np
import pytest
from scipy.stats import unitary_group


def haar(d, rng):
    return unitary_group.rvs(d, random_state=rng)


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_kraus(d_in, d_out, rank, rng):
    """Kraus set of a random channel from a Haar isometry d_in -> d_out * rank."""
    v = haar(d_out * rank, rng)[:, :d_in]
    return v.reshape(rank, d_out, d_in)


def random_density(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Lines recorded by the acceptance suite, repeated at the end of the pytest run.
CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
