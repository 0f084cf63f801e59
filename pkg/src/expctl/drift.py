"""Forward models of coherent drift.

Two event types perturb a state:

* :class:`PairDrift` changes one real theta-basis coefficient ``r_m`` and
  rebalances ``r_n`` so the norm is kept.
* :class:`EnergyPairExchange` rotates the energy amplitudes of levels
  ``(m, n)`` by an angle; every other energy amplitude is untouched.

Both report the exact change of the expectation values together with
first-order predictions, so tests can measure linearization error.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import rng as _rng
from ._kernels import rotate_rows
from .errors import ComplexAmplitudeError, OutOfRange, ValidationError
from .system import ENERGY, THETA, QuantumSystem, State, change_basis, expectation


@dataclass(frozen=True)
class PairDrift:
    m: int
    n: int
    delta_r_m: float

    def __post_init__(self):
        if self.m == self.n:
            raise ValidationError("pair indices must differ")


@dataclass(frozen=True)
class EnergyPairExchange:
    m: int
    n: int
    epsilon: float

    def __post_init__(self):
        if self.m == self.n:
            raise ValidationError("pair indices must differ")
        if abs(self.epsilon) > np.pi / 2:
            raise ValidationError(f"|epsilon| must be <= pi/2, got {self.epsilon}")


def _check_pair(sys, m, n):
    for k in (m, n):
        if not 0 <= k < sys.dim:
            raise IndexError(f"level index {k} outside [0, {sys.dim})")


def apply_pair_drift(sys: QuantumSystem, s: State, d: PairDrift):
    """Shift ``r_m`` by ``delta_r_m``; ``r_n`` absorbs the norm change.

    Returns ``(new_state, linear, exact)`` where ``linear`` is
    ``2 r_m delta_r_m (theta_m - theta_n)`` and ``exact`` is the true change
    of the theta expectation.  The sign of ``r_n`` is kept (``+`` if it was
    zero).
    """
    _check_pair(sys, d.m, d.n)
    a = change_basis(sys, s, THETA).amplitudes
    if max(abs(a[d.m].imag), abs(a[d.n].imag)) > 1e-12:
        raise ComplexAmplitudeError("pair drift needs real amplitudes at m and n")
    r_m, r_n = a[d.m].real, a[d.n].real
    rest = 1.0 - abs(a[d.m]) ** 2 - abs(a[d.n]) ** 2
    new_m = r_m + d.delta_r_m
    rn2 = (r_m**2 + r_n**2) - new_m**2
    if new_m**2 + max(rest, 0.0) > 1.0 + 1e-15 or rn2 < -1e-15:
        raise OutOfRange(f"r_m + delta = {new_m} leaves no valid r_n")
    new_n = np.copysign(np.sqrt(max(rn2, 0.0)), r_n if r_n != 0 else 1.0)
    out = a.copy()
    out[d.m] = new_m
    out[d.n] = new_n
    th = sys.theta_values
    linear = 2.0 * r_m * d.delta_r_m * (th[d.m] - th[d.n])
    new_state = State(THETA, out / np.linalg.norm(out))
    exact = expectation(sys, new_state, THETA) - expectation(sys, s, THETA)
    return change_basis(sys, new_state, s.basis), float(linear), float(exact)


def rotate_energy_pair(b, m, n, epsilon):
    """``b_m <- b_m cos e - b_n sin e``, ``b_n <- b_m sin e + b_n cos e``."""
    out = np.array(b, dtype=complex).reshape(-1, 1)
    # kernel convention: rows (hi, lo) with lo <- c lo - s hi, hi <- c hi + s lo
    if m > n:
        his, los, phis = [m], [n], [-epsilon]
    else:
        his, los, phis = [n], [m], [epsilon]
    rotate_rows(out, np.array(his, dtype=np.int64), np.array(los, dtype=np.int64),
                np.array(phis, dtype=float), np.zeros(1))
    return out[:, 0]


@dataclass(frozen=True)
class ExchangeResult:
    state: State
    delta_theta_exact: float
    delta_energy_exact: float
    delta_theta_linear: float
    delta_energy_linear: float
    # Same predictions with the pair-weighted coefficients in place of the
    # gradients; they drop cross terms and are kept for comparison.
    delta_theta_pair_weighted: float
    delta_energy_pair_weighted: float

    def __iter__(self):
        yield from (self.state, self.delta_theta_exact, self.delta_energy_exact,
                    self.delta_theta_linear, self.delta_energy_linear)


def pair_weights(sys: QuantumSystem, m: int, n: int):
    """``|c_im|^2 + |c_in|^2`` and ``|c_im|^2 E_m + |c_in|^2 E_n`` per theta index."""
    pm = np.abs(sys.overlap[:, m]) ** 2
    pn = np.abs(sys.overlap[:, n]) ** 2
    return pm + pn, pm * sys.energies[m] + pn * sys.energies[n]


def linear_predictions(sys: QuantumSystem, a, da, m: int, n: int):
    """First-order changes of <Theta> and <H> for a theta-basis step ``da``.

    Returns ``(dtheta, denergy, dtheta_pair_weighted, denergy_pair_weighted)``.  The first
    two are the exact linearizations; the ``_pair_weighted`` pair keeps only the
    diagonal pair-weighted terms.
    """
    a = np.asarray(a, dtype=complex)
    da = np.asarray(da, dtype=complex)
    C = sys.overlap
    b = C.T @ a
    db = C.T @ da
    g = 2.0 * (np.conj(a) * da).real
    dtheta = float(g @ sys.theta_values)
    E = sys.energies
    denergy = float(2.0 * (E[m] * np.conj(b[m]) * db[m] + E[n] * np.conj(b[n]) * db[n]).real)
    w_norm, w_energy = pair_weights(sys, m, n)
    dtheta_p = float(np.sum(g * sys.theta_values * w_norm))
    denergy_p = float(np.sum(g * w_energy))
    return dtheta, denergy, dtheta_p, denergy_p


def apply_energy_pair_exchange(sys: QuantumSystem, s: State, e: EnergyPairExchange) -> ExchangeResult:
    """Exact planar rotation of energy levels ``(m, n)`` by ``epsilon``."""
    _check_pair(sys, e.m, e.n)
    b = change_basis(sys, s, ENERGY).amplitudes
    b_new = rotate_energy_pair(b, e.m, e.n, e.epsilon)
    new = State(ENERGY, b_new)
    # first-order amplitude change, mapped to the theta basis
    db1 = np.zeros_like(b)
    db1[e.m] = -e.epsilon * b[e.n]
    db1[e.n] = e.epsilon * b[e.m]
    a = sys.overlap.conj() @ b
    da1 = sys.overlap.conj() @ db1
    dth_lin, de_lin, dth_p, de_p = linear_predictions(sys, a, da1, e.m, e.n)
    E = sys.energies
    p_old = np.abs(b) ** 2
    p_new = np.abs(b_new) ** 2
    de_exact = float((p_new - p_old) @ E)
    dth_exact = expectation(sys, new, THETA) - expectation(sys, s, THETA)
    return ExchangeResult(
        change_basis(sys, new, s.basis), float(dth_exact), de_exact,
        dth_lin, de_lin, dth_p, de_p,
    )


@dataclass(frozen=True)
class EpsilonSpec:
    """Drift angle distribution: ``none``, ``constant`` or truncated ``normal``."""

    kind: str = "constant"
    value: float = 0.0
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "normal"):
            raise ValidationError(f"unknown epsilon kind {self.kind!r}")
        if self.std < 0:
            raise ValidationError("std must be >= 0")
        if self.kind == "constant" and abs(self.value) > np.pi / 2:
            raise ValidationError("constant epsilon must satisfy |epsilon| <= pi/2")


@dataclass(frozen=True)
class DriftSchedule:
    """Seeded schedule of energy-pair exchanges.

    ``pair=None`` draws a uniformly random distinct pair among ``dim``
    levels at each event.
    """

    seed: int
    epsilon: EpsilonSpec = EpsilonSpec()
    pair: Optional[Tuple[int, int]] = (0, 1)
    period: int = 1
    dim: Optional[int] = None

    def __post_init__(self):
        if self.period < 1:
            raise ValidationError("period must be >= 1")
        if self.pair is None:
            if self.dim is None or self.dim < 2:
                raise ValidationError("random pair policy needs dim >= 2")
        elif self.pair[0] == self.pair[1]:
            raise ValidationError("pair indices must differ")

    @property
    def active(self):
        return self.epsilon.kind != "none"


_MAX_TRUNCATION_DRAWS = 64


def next_drift(schedule: DriftSchedule, epoch: int) -> Optional[EnergyPairExchange]:
    """The drift event scheduled at ``epoch``, or None.

    Depends only on ``(schedule, epoch)``.
    """
    if epoch < 0:
        raise ValidationError("epoch must be >= 0")
    if not schedule.active or epoch % schedule.period:
        return None
    spec = schedule.epsilon
    if spec.kind == "constant" and schedule.pair is not None:
        m, n = schedule.pair
        return EnergyPairExchange(m, n, spec.value)
    g = _rng.stream(schedule.seed, _rng.DRIFT, epoch)
    if schedule.pair is None:
        m, n = (int(v) for v in g.choice(schedule.dim, size=2, replace=False))
    else:
        m, n = schedule.pair
    if spec.kind == "constant":
        eps = spec.value
    else:
        eps = 0.0
        for _ in range(_MAX_TRUNCATION_DRAWS):
            x = spec.std * g.standard_normal()
            if abs(x) <= np.pi / 2:
                eps = x
                break
        else:  # pragma: no cover - needs std >> pi
            eps = float(np.clip(x, -np.pi / 2, np.pi / 2))
    return EnergyPairExchange(m, n, float(eps))
