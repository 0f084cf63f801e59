"""Dense linear algebra for small Hermitian operators.

Matrices are plain complex ``ndarray``s; the checks here enforce the
Hermitian / unitary invariants at the package boundary.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotUnitary
from .functions import ScalarFunction

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
DEGENERACY_REL_TOL = 1e-9
# Near-ties in |component| are treated as ties so phase fixing is stable.
_PHASE_TIE_REL = 1e-9


def as_square(A, name="matrix"):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def check_hermitian(A, tol=HERMITIAN_TOL, name="operator"):
    """Return ``A`` as a complex array, raising NotHermitian if it is not."""
    A = as_square(A, name)
    if A.shape[0] < 2:
        raise DimensionMismatch(f"{name} must have dimension >= 2")
    dev = np.max(np.abs(A - A.conj().T))
    if dev > tol:
        raise NotHermitian(f"{name} deviates from Hermitian by {dev:.3e} (tol {tol:g})")
    return A


def check_unitary(U, tol=UNITARY_TOL, name="operator"):
    U = as_square(U, name)
    dev = np.linalg.norm(U @ U.conj().T - np.eye(U.shape[0]))
    if dev > tol:
        raise NotUnitary(f"{name} deviates from unitary by {dev:.3e} (tol {tol:g})")
    return U


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _lead_index(v):
    mag = np.abs(v)
    top = mag.max()
    return int(np.flatnonzero(mag >= top * (1.0 - _PHASE_TIE_REL))[0])


def _fix_phase(v):
    k = _lead_index(v)
    return v * (np.conj(v[k]) / abs(v[k])), k


def _canonical_cluster(V):
    """Basis-independent orthonormal basis for span(V).

    Greedy pivoted Gram-Schmidt on the projector's columns: repeatedly take
    the standard basis vector with the largest remaining projection.
    """
    n, d = V.shape
    P = V @ V.conj().T
    chosen = []
    for _ in range(d):
        R = P.copy()
        for q in chosen:
            R -= np.outer(q, q.conj() @ R)
        norms = np.linalg.norm(R, axis=0)
        j = _lead_index(norms)
        q = R[:, j] / norms[j]
        chosen.append(q)
    return np.column_stack(chosen)


def eigendecompose(A) -> SpectralDecomposition:
    """Ascending eigenvalues with deterministic, phase-fixed eigenvectors.

    Each eigenvector is scaled so its largest-magnitude entry is real and
    positive.  Inside a degenerate cluster (consecutive gap below 1e-9 of
    the spectral range) the basis is rebuilt canonically and the columns
    are ordered by the index of their leading entry.
    """
    A = check_hermitian(A)
    A = 0.5 * (A + A.conj().T)
    w, V = np.linalg.eigh(A)
    spread = w[-1] - w[0]
    tol = DEGENERACY_REL_TOL * spread
    clusters, start = [], 0
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > tol:
            clusters.append((start, i))
            start = i
    clusters.append((start, len(w)))

    vecs = np.empty_like(V)
    for a, b in clusters:
        block = V[:, a:b] if b - a == 1 else _canonical_cluster(V[:, a:b])
        fixed = [_fix_phase(block[:, j]) for j in range(b - a)]
        fixed.sort(key=lambda t: t[1])
        for j, (v, _) in enumerate(fixed):
            vecs[:, a + j] = v
    return SpectralDecomposition(w, vecs)


def commutator(A, B):
    """``AB - BA``."""
    A = as_square(A, "A")
    B = as_square(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return A @ B - B @ A


def apply_scalar_function(f: ScalarFunction, A):
    """Spectral calculus ``V f(Lambda) V^dagger``."""
    dec = eigendecompose(A)
    fl = f(dec.eigenvalues)
    V = dec.eigenvectors
    M = (V * fl) @ V.conj().T
    return 0.5 * (M + M.conj().T)


def unitary_from_generator(A, s):
    """``exp(-i s A)`` for Hermitian ``A``."""
    dec = eigendecompose(A)
    V = dec.eigenvectors
    return (V * np.exp(-1j * s * dec.eigenvalues)) @ V.conj().T


def random_hermitian(dim, rng, real=False):
    """Gaussian Hermitian matrix (GUE-like; GOE-like when ``real``)."""
    X = rng.standard_normal((dim, dim))
    if not real:
        X = X + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (X + X.conj().T)
