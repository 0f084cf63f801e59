"""Recover theta-basis coefficient changes from observed expectation shifts.

Given a prior state with real theta amplitudes ``a``, a hypothesized
energy pair ``(m, n)`` and observed shifts of <Theta> and <H>, the
coefficient change ``da`` solves the stacked linear system

    row 0   theta response        . da = dtheta
    row 1   energy response       . da = denergy
    row 2   normalization         . da = 0
    rows 3+ c[:, k] (re, im)      . da = 0      for every k not in {m, n}

in the least-squares sense (N+1 or more rows, N unknowns).  The last
block says the energy amplitudes outside the pair do not move; it is
exact.  The first three rows are linearizations, so their residual is
second order in the drift.

``model="linearized"`` (default) uses the exact gradients.
``model="pair_weighted"`` uses the pair-weighted coefficients
``|c_im|^2 + |c_in|^2`` and ``|c_im|^2 E_m + |c_in|^2 E_n`` instead.  Those
rows omit cross terms, so their error is first order in the drift; they
are kept to quantify the difference.
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .drift import pair_weights
from .errors import (
    ComplexAmplitudeError,
    ControllerFailure,
    InconsistentObservation,
    SingularSystem,
    ValidationError,
)
from .system import THETA, QuantumSystem, State, change_basis

MAX_CONDITION = 1e12
_NULL_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DriftDiagnosis:
    delta_a: np.ndarray
    residual: float
    condition: float
    sign_ambiguous: bool
    alternate: Optional[np.ndarray]
    m: int
    n: int
    threshold: float


def design_matrix(sys: QuantumSystem, a, m: int, n: int, model: str = "linearized"):
    a = np.asarray(a, dtype=float)
    C = sys.overlap
    th, E = sys.theta_values, sys.energies
    if model == "linearized":
        b = C.T @ a
        r_theta = 2.0 * a * th
        r_energy = 2.0 * (E[m] * np.conj(b[m]) * C[:, m] + E[n] * np.conj(b[n]) * C[:, n]).real
        r_norm = 2.0 * a
    elif model == "pair_weighted":
        w_norm, w_energy = pair_weights(sys, m, n)
        r_theta = 2.0 * a * th * w_norm
        r_energy = 2.0 * a * w_energy
        r_norm = a * w_norm
    else:
        raise ValidationError(f"unknown model {model!r}")
    others = [k for k in range(sys.dim) if k not in (m, n)]
    rows = [r_theta, r_energy, r_norm]
    rows += [C[:, k].real for k in others]
    if not sys.is_real:
        rows += [C[:, k].imag for k in others]
    return np.array(rows)


def default_threshold(sys: QuantumSystem, observed_dtheta, observed_denergy, delta_a):
    """Residual allowance: 1e-6 floor plus the worst-case quadratic remainder.

    The exact relations are quadratic in ``da``; their neglected terms are
    bounded by ``|da|^2 sqrt(1 + theta_max^2 + E_max^2)``.  The factor 2
    covers the gap between the recovered and the true ``da``.
    """
    s = abs(observed_dtheta) + abs(observed_denergy)
    scale = np.sqrt(1.0 + np.max(np.abs(sys.theta_values)) ** 2 + np.max(np.abs(sys.energies)) ** 2)
    return 1e-6 * max(1.0, s) + 2.0 * float(delta_a @ delta_a) * scale


def _constraint_null_space(A):
    K = A[2:]
    _, sv, vh = np.linalg.svd(K)
    tol = _NULL_REL_TOL * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    return vh[rank:].T


def solve_drift(sys: QuantumSystem, prior: State, observed_dtheta: float, observed_denergy: float,
                m: int, n: int, *, model: str = "linearized", threshold: Optional[float] = None,
                max_condition: float = MAX_CONDITION, noise: float = 0.0) -> DriftDiagnosis:
    """Least-squares drift diagnosis for the level pair ``(m, n)``.

    ``noise`` is an uncertainty on the observed shifts (e.g. a few sampling
    standard errors); it is added to the default residual threshold.

    Raises:
        SingularSystem: design matrix condition number above ``max_condition``.
        InconsistentObservation: residual above ``threshold``
            (default :func:`default_threshold`).
    """
    if m == n or not (0 <= m < sys.dim and 0 <= n < sys.dim):
        raise ValidationError(f"invalid level pair ({m}, {n}) for dimension {sys.dim}")
    a_c = change_basis(sys, prior, THETA).amplitudes
    if np.max(np.abs(a_c.imag)) > 1e-12:
        raise ComplexAmplitudeError("drift diagnosis needs a prior with real theta amplitudes")
    a = a_c.real
    A = design_matrix(sys, a, m, n, model)
    rhs = np.zeros(A.shape[0])
    rhs[0] = observed_dtheta
    rhs[1] = observed_denergy
    condition = float(np.linalg.cond(A))

    if observed_dtheta == 0.0 and observed_denergy == 0.0:
        zero = np.zeros(sys.dim)
        thr = threshold if threshold is not None else default_threshold(sys, 0.0, 0.0, zero) + noise
        return DriftDiagnosis(zero, 0.0, max(condition, 1.0), False, None, m, n, thr)

    if not condition <= max_condition:
        raise SingularSystem(f"design matrix condition {condition:.3e} exceeds {max_condition:g}")
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    residual = float(np.linalg.norm(A @ x - rhs))
    if threshold is not None:
        thr = threshold
    else:
        thr = default_threshold(sys, observed_dtheta, observed_denergy, x) + noise
    if residual > thr:
        raise InconsistentObservation(
            f"residual {residual:.3e} exceeds {thr:.3e} for pair ({m}, {n})"
        )

    # Reflect the component the constraint rows leave free; if the reflected
    # vector fits about as well, the observations cannot fix the sign.
    alternate = None
    ambiguous = False
    Z = _constraint_null_space(A)
    if Z.shape[1]:
        proj = Z @ (Z.T @ x)
        if np.linalg.norm(proj) > 1e-12 * max(np.linalg.norm(x), 1e-300):
            alt = x - 2.0 * proj
            alt_res = float(np.linalg.norm(A @ alt - rhs))
            floor = 1e-15 * max(1.0, float(np.linalg.norm(rhs)))
            if alt_res <= 2.0 * max(residual, floor):
                ambiguous = True
                alternate = alt
    return DriftDiagnosis(x, residual, max(condition, 1.0), ambiguous, alternate, m, n, thr)


def solve_drift_blind(sys: QuantumSystem, prior: State, observed_dtheta: float,
                      observed_denergy: float, **kwargs) -> DriftDiagnosis:
    """Try every level pair and keep the lowest-residual diagnosis.

    The known-pair :func:`solve_drift` is the primary path; this search is an
    extension for when the drifting pair is not known.
    """
    best = None
    last_err = None
    for n, m in combinations(range(sys.dim), 2):
        try:
            d = solve_drift(sys, prior, observed_dtheta, observed_denergy, m, n, **kwargs)
        except ControllerFailure as exc:
            last_err = exc
            continue
        if best is None or d.residual < best.residual:
            best = d
    if best is None:
        raise last_err if last_err is not None else SingularSystem("no pair could be diagnosed")
    return best
