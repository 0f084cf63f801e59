"""Pulse-sequence synthesis from two-level rotations.

A pulse on levels ``(m, n)`` with ``m > n`` is the unitary

    V = exp[phi (e^{i chi} |m><n| - e^{-i chi} |n><m|)]

which acts as identity outside span{e_m, e_n}:

    V e_n = cos(phi) e_n + e^{i chi} sin(phi) e_m
    V e_m = cos(phi) e_m - e^{-i chi} sin(phi) e_n

Each pulse is addressed by its resonance frequency ``E_m - E_n``
(hbar = 1).  A sequence applies ``V_1`` first and the global phase
``exp(i gamma)`` last.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Optional, Tuple

import numpy as np

from . import rng as _rng
from ._kernels import rotate_rows
from .diagnose import DriftDiagnosis
from .errors import (
    DegenerateObservable,
    DimensionMismatch,
    NoCorrection,
    NoCounterexample,
    NonUniqueGaps,
    OutOfPlane,
    ValidationError,
)
from .spectral import check_hermitian, check_unitary
from .system import ENERGY, QuantumSystem, State, change_basis

_TWO_PI = 2.0 * np.pi


def wrap_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    y = float(np.mod(x + np.pi, _TWO_PI)) - np.pi
    return np.pi if y == -np.pi else y


@dataclass(frozen=True)
class Pulse:
    m: int
    n: int
    phi: float
    chi: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not self.m > self.n >= 0:
            raise ValidationError(f"pulse needs m > n >= 0, got ({self.m}, {self.n})")
        if not -np.pi < self.phi <= np.pi:
            raise ValidationError(f"phi must lie in (-pi, pi], got {self.phi}")

    def inverse(self) -> "Pulse":
        return Pulse(self.m, self.n, wrap_angle(-self.phi), self.chi, self.omega)


@dataclass(frozen=True)
class PulseSequence:
    pulses: Tuple[Pulse, ...] = ()
    gamma: float = 0.0

    def __len__(self):
        return len(self.pulses)

    def inverse(self) -> "PulseSequence":
        return PulseSequence(tuple(p.inverse() for p in reversed(self.pulses)), -self.gamma)

    def arrays(self):
        his = np.array([p.m for p in self.pulses], dtype=np.int64)
        los = np.array([p.n for p in self.pulses], dtype=np.int64)
        phis = np.array([p.phi for p in self.pulses], dtype=float)
        chis = np.array([p.chi for p in self.pulses], dtype=float)
        return his, los, phis, chis

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "pulses": [{"m": p.m, "n": p.n, "phi": p.phi, "chi": p.chi, "omega": p.omega}
                       for p in self.pulses],
        }

    @classmethod
    def from_dict(cls, d):
        pulses = tuple(Pulse(int(p["m"]), int(p["n"]), float(p["phi"]), float(p.get("chi", 0.0)),
                             float(p.get("omega", 0.0))) for p in d.get("pulses", []))
        return cls(pulses, float(d.get("gamma", 0.0)))


def two_level_rotation(N: int, m: int, n: int, phi: float, chi: float = 0.0) -> np.ndarray:
    """Dense ``N x N`` matrix of one pulse."""
    if not 0 <= n < m < N:
        raise IndexError(f"need 0 <= n < m < N, got n={n}, m={m}, N={N}")
    U = np.eye(N, dtype=complex)
    c, s = np.cos(phi), np.sin(phi)
    ph = np.exp(1j * chi)
    U[n, n] = c
    U[m, m] = c
    U[m, n] = ph * s
    U[n, m] = -np.conj(ph) * s
    return U


def compose(seq: PulseSequence, dim: int) -> np.ndarray:
    """Matrix of the whole sequence, ``exp(i gamma) V_k ... V_1``."""
    M = np.eye(dim, dtype=complex)
    rotate_rows(M, *seq.arrays())
    return np.exp(1j * seq.gamma) * M


def apply_sequence(seq: PulseSequence, s: State) -> State:
    """Apply the pulses to an energy-basis state, ``V_1`` first."""
    if s.basis != ENERGY:
        raise ValidationError("pulse sequences act on energy-basis states")
    for p in seq.pulses:
        if p.m >= s.dim:
            raise DimensionMismatch(f"pulse on level {p.m} for a {s.dim}-level state")
    v = np.array(s.amplitudes, dtype=complex).reshape(-1, 1)
    rotate_rows(v, *seq.arrays())
    out = np.exp(1j * seq.gamma) * v[:, 0]
    return State(ENERGY, out / np.linalg.norm(out))


@dataclass(frozen=True)
class ResonanceTable:
    entries: Dict[Tuple[int, int], float]
    unique: bool
    min_gap_separation: float
    separation_tol: float = field(default=0.0)

    def sorted_entries(self):
        return sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))


def default_separation_tol(energies) -> float:
    E = np.asarray(energies, dtype=float)
    return 1e-9 * max(E[-1] - E[0], np.finfo(float).tiny)


def resonance_table(energies, separation_tol: Optional[float] = None) -> ResonanceTable:
    """All transition frequencies ``E_m - E_n`` (m > n) and the unique-gap verdict."""
    E = np.asarray(energies, dtype=float)
    if np.any(np.diff(E) <= 0):
        raise ValidationError("resonance table needs strictly ascending energies")
    tol = default_separation_tol(E) if separation_tol is None else float(separation_tol)
    entries = {(m, n): float(E[m] - E[n]) for n, m in combinations(range(E.size), 2)}
    omegas = np.sort(np.array(list(entries.values())))
    sep = float(np.min(np.diff(omegas))) if omegas.size > 1 else np.inf
    return ResonanceTable(entries, bool(sep > tol), sep, tol)


def _require_unique(sys: QuantumSystem, separation_tol):
    if np.any(np.diff(sys.energies) <= 0):
        raise NonUniqueGaps("degenerate energies: some transitions have zero frequency")
    table = resonance_table(sys.energies, separation_tol)
    if not table.unique:
        raise NonUniqueGaps(
            f"transition frequencies coincide (min separation {table.min_gap_separation:.3e})"
        )
    return table


def compile_state_prep(sys: QuantumSystem, target: State,
                       separation_tol: Optional[float] = None) -> PulseSequence:
    """Pulses on the chain (0,1), (1,2), ... taking ``e_0`` to ``target``.

    Step ``k`` splits the amplitude held on level ``k`` between ``k`` and
    ``k+1`` with ``phi_k = atan2(|t_{k+1:}|, |t_k|)``; ``chi_k`` assigns the
    phase of level ``k+1`` and ``gamma`` carries the phase of ``t_0``.
    Trailing identity steps are dropped.
    """
    table = _require_unique(sys, separation_tol)
    t = change_basis(sys, target, ENERGY).amplitudes
    N = t.size
    mags = np.abs(t)
    tails = np.sqrt(np.cumsum((mags**2)[::-1])[::-1])  # tails[k] = |t_{k:}|
    phases = np.angle(t)
    gamma = float(phases[0]) if mags[0] > 0 else 0.0
    alpha = 0.0  # phase currently carried on level k, relative to gamma
    pulses = []
    for k in range(N - 1):
        rest = tails[k + 1]
        if rest <= 1e-15 * tails[0]:
            break
        phi = float(np.arctan2(rest, mags[k]))
        beta = phases[k + 1] - gamma if mags[k + 1] > 0 else alpha
        chi = wrap_angle(beta - alpha)
        pulses.append(Pulse(k + 1, k, phi, chi, table.entries[(k + 1, k)]))
        alpha = alpha + chi
    return PulseSequence(tuple(pulses), wrap_angle(gamma) if gamma else 0.0)


def planar_component(reference_b, db, m: int, n: int) -> float:
    """Sine of the pulse angle on ``(hi, lo)`` that best explains ``db``.

    A pulse ``phi`` on the pair moves ``(b_lo, b_hi)`` along
    ``(-b_hi, b_lo)`` at rate ``sin(phi)``; the radial part of ``db`` is
    second order and ignored.
    """
    hi, lo = max(m, n), min(m, n)
    b = np.asarray(reference_b, dtype=complex)
    rho2 = abs(b[hi]) ** 2 + abs(b[lo]) ** 2
    if rho2 == 0.0:
        return 0.0
    tang = np.conj(-b[hi]) * db[lo] + np.conj(b[lo]) * db[hi]
    return float(tang.real / rho2)


def compile_correction(sys: QuantumSystem, diagnosis: DriftDiagnosis, current: State,
                       m: int, n: int, delta_a=None) -> PulseSequence:
    """One resonant pulse on ``(m, n)`` undoing the diagnosed rotation.

    ``current`` is the reference state the diagnosis was computed against.
    ``delta_a`` overrides ``diagnosis.delta_a`` (used for the alternate-sign
    candidate).

    Raises:
        OutOfPlane: the diagnosed change has energy components outside the
            pair larger than 10x the diagnosis residual.
        NoCorrection: the implied rotation angle is below 1e-14.
    """
    if {m, n} != {diagnosis.m, diagnosis.n}:
        raise ValidationError("diagnosis was computed for a different level pair")
    da = np.asarray(diagnosis.delta_a if delta_a is None else delta_a, dtype=float)
    db = sys.overlap.T @ da
    mask = np.ones(sys.dim, dtype=bool)
    mask[[m, n]] = False
    leak = float(np.max(np.abs(db[mask]), initial=0.0))
    allowed = 10.0 * diagnosis.residual + 1e-12 * max(1.0, float(np.linalg.norm(db)))
    if leak > allowed:
        raise OutOfPlane(f"diagnosed change leaks {leak:.3e} outside pair ({m}, {n})")
    b = change_basis(sys, current, ENERGY).amplitudes
    kappa = float(np.clip(planar_component(b, db, m, n), -1.0, 1.0))
    drift_angle = float(np.arcsin(kappa))
    if abs(drift_angle) < 1e-14:
        raise NoCorrection("diagnosed rotation is negligible")
    hi, lo = max(m, n), min(m, n)
    omega = float(sys.energies[hi] - sys.energies[lo])
    return PulseSequence((Pulse(hi, lo, wrap_angle(-drift_angle), 0.0, omega),), 0.0)


@dataclass(frozen=True, eq=False)
class LemmaReport:
    preimage: np.ndarray
    probe: np.ndarray
    expectation_probe: float
    expectation_target: float
    gap: float
    attempts: int


def random_state_vector(dim: int, g: np.random.Generator) -> np.ndarray:
    v = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    return v / np.linalg.norm(v)


def lemma_demonstration(Theta, candidate, target, seed: int, *, probe=None,
                        min_gap: float = 1e-3, max_resamples: int = 100) -> LemmaReport:
    """Show that ``candidate`` does not send every state to target's <Theta>.

    The only state mapped exactly onto ``target`` is ``p = U^-1 target``.
    A second state ``q`` (seeded random, or ``probe``) with fidelity below
    ``1 - 1e-6`` against ``p`` is mapped to ``U q``, whose expectation
    differs from the target's by more than ``min_gap``.
    """
    Theta = check_hermitian(Theta, name="observable")
    U = check_unitary(candidate, name="candidate")
    N = Theta.shape[0]
    t = target.amplitudes if isinstance(target, State) else np.asarray(target, dtype=complex)
    if U.shape != Theta.shape or t.shape != (N,):
        raise DimensionMismatch("observable, candidate and target dimensions differ")
    scalar = np.trace(Theta).real / N
    if np.linalg.norm(Theta - scalar * np.eye(N)) <= 1e-12 * max(1.0, np.linalg.norm(Theta)):
        raise DegenerateObservable("observable is a multiple of identity; every state shares <Theta>")
    p = U.conj().T @ t
    target_val = float(np.vdot(t, Theta @ t).real)

    def try_probe(q):
        q = np.asarray(q, dtype=complex)
        q = q / np.linalg.norm(q)
        if abs(np.vdot(p, q)) ** 2 >= 1.0 - 1e-6:
            return None
        out = U @ q
        val = float(np.vdot(out, Theta @ out).real)
        return q, val

    if probe is not None:
        got = try_probe(probe)
        if got is None:
            raise ValidationError("probe coincides with the preimage of the target")
        q, val = got
        return LemmaReport(p, q, val, target_val, abs(val - target_val), 1)

    for attempt in range(1, max_resamples + 1):
        g = _rng.stream(seed, _rng.LEMMA, attempt)
        got = try_probe(random_state_vector(N, g))
        if got is None:
            continue
        q, val = got
        if abs(val - target_val) > min_gap:
            return LemmaReport(p, q, val, target_val, abs(val - target_val), attempt)
    raise NoCounterexample(f"no probe with gap > {min_gap} in {max_resamples} draws")
