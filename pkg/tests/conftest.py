import numpy as np
import pytest

from expctl.system import ENERGY, State, build_system

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
H_45 = np.diag([0.0, 1.0])
THETA_45 = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])


@pytest.fixture
def two_level():
    """H = diag(0, 1) with an observable rotated 45 degrees from it."""
    return build_system(H_45, THETA_45)


@pytest.fixture
def ground():
    return State.basis_state(ENERGY, 2, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
