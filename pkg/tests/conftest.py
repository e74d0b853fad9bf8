import numpy as np
import pytest

from viscowave.medium import isotropic_elastic, reference_medium_a, reference_medium_b


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def medium_a():
    return reference_medium_a()


@pytest.fixture(scope="session")
def medium_b():
    return reference_medium_b()


@pytest.fixture(scope="session")
def elastic():
    return isotropic_elastic()


def random_upper_half_matrix(rng, d=3):
    """B = H1 + i H2 with H1 real symmetric and H2 Hermitian PSD."""
    H1 = rng.standard_normal((d, d))
    H1 = 0.5 * (H1 + H1.T)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return H1 + 1j * (G @ G.conj().T) / 3.0


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
