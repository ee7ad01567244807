import numpy as np
import pytest

from dcsbm_spectral.graph import Graph, WeightMeasure

# PASS/FAIL lines collected by the acceptance suite, printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture(scope="session")
def fig5_measure():
    return WeightMeasure.from_atoms([(0.1, 0.75), (0.5, 0.25)])


@pytest.fixture(scope="session")
def fig8_measure():
    return WeightMeasure.from_atoms([(0.2, 0.75), (0.8, 0.25)])


def path_graph(n=3):
    A = np.zeros((n, n), bool)
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = True
    return Graph(A)


def ring_graph(n, k=1):
    """Circulant graph where each node links to its k nearest neighbours on
    each side (2k-regular)."""
    A = np.zeros((n, n), bool)
    for s in range(1, k + 1):
        idx = np.arange(n)
        A[idx, (idx + s) % n] = True
        A[(idx + s) % n, idx] = True
    return Graph(A)
