"""Dual-basis model of a finite quantum system.

A :class:`QuantumSystem` holds the energy spectrum ``E_i``, the observable
spectrum ``theta_k`` and the overlap matrix ``c[k, i] = <E_i|Theta_k>``.
A :class:`State` carries amplitudes in one of the two eigenbases:

    theta basis:  |psi> = sum_k a_k |Theta_k>
    energy basis: |psi> = sum_i b_i |E_i>,   b_i = sum_k a_k c[k, i]

All indices are 0-based; index 0 is the ground state.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import (
    DimensionMismatch,
    NonRealResult,
    NotNormalized,
    OutOfRange,
    Unidentifiable,
    ValidationError,
)
from .functions import ScalarFunction
from .spectral import (
    UNITARY_TOL,
    apply_scalar_function,
    check_hermitian,
    check_unitary,
    commutator,
    eigendecompose,
)

ENERGY = "energy"
THETA = "theta"
BASES = (ENERGY, THETA)

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class State:
    """Normalized amplitude vector tagged with its basis."""

    basis: str
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValidationError(f"basis must be one of {BASES}, got {self.basis!r}")
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 1:
            raise DimensionMismatch("amplitudes must be a vector")
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NotNormalized(f"squared norm is {norm2!r}, expected 1")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, basis, amplitudes):
        amp = np.asarray(amplitudes, dtype=complex)
        return cls(basis, amp / np.linalg.norm(amp))

    @classmethod
    def basis_state(cls, basis, dim, k):
        amp = np.zeros(dim, dtype=complex)
        amp[k] = 1.0
        return cls(basis, amp)

    def is_real(self, tol=1e-12):
        return bool(np.max(np.abs(self.amplitudes.imag), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    energies: np.ndarray
    theta_values: np.ndarray
    overlap: np.ndarray
    # Matrix-basis eigenvectors, present when built from operators.
    energy_vectors: Optional[np.ndarray] = None
    theta_vectors: Optional[np.ndarray] = None

    def __post_init__(self):
        E = np.array(self.energies, dtype=float)
        th = np.array(self.theta_values, dtype=float)
        C = np.array(self.overlap, dtype=complex)
        n = E.shape[0]
        if E.ndim != 1 or th.shape != (n,) or C.shape != (n, n):
            raise DimensionMismatch(
                f"energies {E.shape}, theta_values {th.shape}, overlap {C.shape} are inconsistent"
            )
        if n < 2:
            raise DimensionMismatch("dimension must be >= 2")
        if np.any(np.diff(E) < 0):
            raise ValidationError("energies must be ascending")
        if np.any(np.diff(th) < 0):
            raise ValidationError("theta_values must be ascending")
        check_unitary(C, UNITARY_TOL, "overlap")
        for arr in (E, th, C):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "theta_values", th)
        object.__setattr__(self, "overlap", C)

    @property
    def dim(self):
        return self.energies.shape[0]

    @property
    def is_real(self):
        return bool(np.max(np.abs(self.overlap.imag)) <= 1e-14)

    def theta_in_energy_basis(self):
        """Matrix of the observable in energy coordinates, ``C^T diag(theta) C*``."""
        C = self.overlap
        return (C.T * self.theta_values) @ C.conj()

    def energy_in_theta_basis(self):
        C = self.overlap
        return (C.conj() * self.energies) @ C.T

    def to_matrix_basis(self, s: State) -> np.ndarray:
        """Amplitudes in the basis of the original operator matrices."""
        if self.energy_vectors is None:
            raise ValidationError("system was not built from operator matrices")
        b = change_basis(self, s, ENERGY).amplitudes
        return self.energy_vectors @ b


def build_system(H, Theta) -> QuantumSystem:
    """Eigendecompose both operators and form ``c[k, i] = <E_i|Theta_k>``."""
    H = check_hermitian(H, name="hamiltonian")
    Theta = check_hermitian(Theta, name="observable")
    if H.shape != Theta.shape:
        raise DimensionMismatch(f"hamiltonian {H.shape} and observable {Theta.shape} differ")
    dh = eigendecompose(H)
    dt = eigendecompose(Theta)
    C = (dh.eigenvectors.conj().T @ dt.eigenvectors).T
    return QuantumSystem(dh.eigenvalues, dt.eigenvalues, C, dh.eigenvectors, dt.eigenvectors)


def change_basis(sys: QuantumSystem, s: State, target: str) -> State:
    if target not in BASES:
        raise ValidationError(f"unknown basis {target!r}")
    if s.dim != sys.dim:
        raise DimensionMismatch(f"state dim {s.dim} != system dim {sys.dim}")
    if s.basis == target:
        return s
    if target == ENERGY:
        amp = sys.overlap.T @ s.amplitudes
    else:
        amp = sys.overlap.conj() @ s.amplitudes
    # Renormalize away roundoff so chained conversions stay on the sphere.
    return State(target, amp / np.linalg.norm(amp))


def probabilities(sys: QuantumSystem, s: State, which: str) -> np.ndarray:
    amp = change_basis(sys, s, which).amplitudes
    return amp.real**2 + amp.imag**2


def expectation(sys: QuantumSystem, s: State, which: str = THETA) -> float:
    """Born-rule average of theta (``which='theta'``) or energy."""
    spec = sys.theta_values if which == THETA else sys.energies
    p = probabilities(sys, s, which)
    return float(np.clip(p @ spec, spec[0], spec[-1]))


def theta_expectation_energy_route(sys: QuantumSystem, b) -> float:
    """Theta expectation from energy amplitudes without forming ``a``.

    Evaluates ``sum_ij conj(b_i) [sum_k c_ki theta_k conj(c_kj)] b_j``.
    """
    b = np.asarray(b, dtype=complex)
    return float(np.vdot(b, sys.theta_in_energy_basis() @ b).real)


def theta_expectation_weighted(sys: QuantumSystem, a) -> float:
    """``sum_k |a_k|^2 (sum_i |c_ki|^2) theta_k``, using the row normalization."""
    a = np.asarray(a, dtype=complex)
    w = np.sum(np.abs(sys.overlap) ** 2, axis=1)
    return float(np.sum(np.abs(a) ** 2 * w * sys.theta_values))


def heisenberg_rate(H, O, psi) -> float:
    """``<psi| i[H, O] |psi>``, the instantaneous rate of ``<O>``."""
    if isinstance(psi, State):
        psi = psi.amplitudes
    psi = np.asarray(psi, dtype=complex)
    G = 1j * commutator(H, O)
    if psi.shape != (G.shape[0],):
        raise DimensionMismatch("state and operators have different dimensions")
    val = np.vdot(psi, G @ psi)
    if abs(val.imag) > 1e-10:
        raise NonRealResult(f"rate has imaginary part {val.imag:.3e}")
    return float(val.real)


def evolve_free(sys: QuantumSystem, s: State, t: float) -> State:
    """Free evolution for time ``t``: ``b_i -> b_i exp(-i E_i t)``."""
    b = change_basis(sys, s, ENERGY).amplitudes
    out = State(ENERGY, b * np.exp(-1j * sys.energies * t))
    return change_basis(sys, out, s.basis)


def degeneracy_groups(energies, tol: Optional[float] = None) -> List[List[int]]:
    """Cluster ascending energies whose consecutive gaps are below ``tol``.

    ``tol`` defaults to 1e-9 of the spectral range.
    """
    E = np.asarray(energies, dtype=float)
    if E.size == 0:
        return []
    if tol is None:
        tol = 1e-9 * (E[-1] - E[0])
    groups = [[0]]
    for i in range(1, E.size):
        if E[i] - E[i - 1] < tol or E[i] == E[i - 1]:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eq6_discrepancy(H, f: ScalarFunction, psi) -> Tuple[float, float, float]:
    """Compare ``<f(H)>`` with ``f(<H>)`` in state ``psi``.

    The two agree for eigenstates and affine ``f`` but not in general;
    returns ``(lhs, rhs, |lhs - rhs|)``.
    """
    if isinstance(psi, State):
        psi = psi.amplitudes
    psi = np.asarray(psi, dtype=complex)
    H = check_hermitian(H)
    fH = apply_scalar_function(f, H)
    lhs = float(np.vdot(psi, fH @ psi).real)
    mean_h = float(np.vdot(psi, H @ psi).real)
    rhs = float(f(np.array([mean_h]))[0])
    return lhs, rhs, abs(lhs - rhs)


@dataclass(frozen=True)
class MixtureModel:
    """Two species with known mean energies and observable ``f(<H>)``."""

    mean_energy_1: float
    mean_energy_2: float
    f: ScalarFunction

    def __post_init__(self):
        if self.mean_energy_1 == self.mean_energy_2:
            raise Unidentifiable("mean energies are equal; weights cannot be separated")

    def forward(self, w1: float) -> float:
        x = w1 * self.mean_energy_1 + (1.0 - w1) * self.mean_energy_2
        return float(self.f(np.array([x]))[0])


def mixture_weights(m: MixtureModel, observed_theta: float) -> Tuple[float, float]:
    """Solve ``f(w1 E1 + w2 E2) = observed`` with ``w1 + w2 = 1``.

    ``f`` is inverted by bisection on the segment between the two mean
    energies, which must lie inside one of ``f``'s declared monotone
    intervals.
    """
    e1, e2 = float(m.mean_energy_1), float(m.mean_energy_2)
    if e1 == e2:
        raise Unidentifiable("mean energies are equal")
    lo, hi = min(e1, e2), max(e1, e2)
    if m.f.monotone_interval_containing(lo, hi) is None:
        raise Unidentifiable(f"{m.f.name} is not monotone on [{lo}, {hi}]")
    f_lo, f_hi = (float(v) for v in m.f(np.array([lo, hi])))
    y = float(observed_theta)
    if not min(f_lo, f_hi) <= y <= max(f_lo, f_hi):
        raise OutOfRange(
            f"observed {y} outside [{min(f_lo, f_hi)}, {max(f_lo, f_hi)}] reachable by mixtures"
        )

    def g(x):
        return float(m.f(np.array([x]))[0]) - y

    if y == f_lo:
        x = lo
    elif y == f_hi:
        x = hi
    else:
        x = optimize.bisect(g, lo, hi, xtol=1e-15 * max(1.0, abs(lo), abs(hi)), rtol=4 * np.finfo(float).eps, maxiter=200)
    w1 = (x - e2) / (e1 - e2)
    w1 = min(1.0, max(0.0, w1))
    return w1, 1.0 - w1


def random_system(dim: int, rng: np.random.Generator, real: bool = False) -> QuantumSystem:
    """System built from two independent Gaussian Hermitian operators."""
    from .spectral import random_hermitian

    return build_system(random_hermitian(dim, rng, real), random_hermitian(dim, rng, real))


def random_state(dim: int, rng: np.random.Generator, basis: str = THETA, real: bool = False) -> State:
    v = rng.standard_normal(dim)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    return State.normalized(basis, v)
