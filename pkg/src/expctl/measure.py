"""Ensemble measurement: Born-rule sampling on clones of the state.

Sampling never touches the controlled state; each call only draws
outcomes for ``shots`` notional clones.  Shot ``j`` of a stream uses the
``j``-th uniform of the counter-based stream ``(seed, *words)``, so
reports are reproducible regardless of chunking.
"""
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._kernels import born_counts
from .errors import ValidationError
from .system import ENERGY, THETA, QuantumSystem, State, expectation, probabilities


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    mean: float
    stderr: float
    shots: int
    histogram: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, EstimatorReport):
            return NotImplemented
        return (self.mean == other.mean and self.stderr == other.stderr
                and self.shots == other.shots
                and np.array_equal(self.histogram, other.histogram))


def born_cdf(p):
    """Cumulative distribution with the last reachable entry pinned to 1."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
        raise ValidationError(f"invalid Born probabilities (sum {p.sum()!r})")
    p = np.clip(p, 0.0, None)
    cdf = np.cumsum(p / p.sum())
    last = int(np.flatnonzero(p > 0)[-1])
    cdf[last:] = 1.0
    return cdf


def sample_counts(p, shots, seed, words):
    cdf = born_cdf(p)
    counts = np.zeros(cdf.shape[0], dtype=np.int64)
    for u in _rng.iter_shot_uniforms(seed, words, shots):
        counts += born_counts(cdf, u)
    return counts


def report_from_counts(counts, spectrum):
    counts = np.asarray(counts, dtype=np.int64)
    spectrum = np.asarray(spectrum, dtype=float)
    M = int(counts.sum())
    mean = float(counts @ spectrum / M)
    if M > 1:
        var = float(counts @ (spectrum - mean) ** 2 / (M - 1))
    else:
        var = 0.0
    return EstimatorReport(mean, float(np.sqrt(var / M)), M, counts)


def sample_estimate(sys: QuantumSystem, s: State, which: str, shots: int, seed: int,
                    stream=()) -> EstimatorReport:
    """Estimate <Theta> or <H> from ``shots`` projective measurements.

    ``stream`` is an optional tuple of extra address words (the closed loop
    passes the epoch) so independent measurements never share uniforms.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    tag = _rng.SHOTS_THETA if which == THETA else _rng.SHOTS_ENERGY
    spectrum = sys.theta_values if which == THETA else sys.energies
    counts = sample_counts(probabilities(sys, s, which), shots, seed, (tag, *stream))
    return report_from_counts(counts, spectrum)


def exact_expectation(sys: QuantumSystem, s: State, which: str = THETA) -> float:
    return expectation(sys, s, which)


__all__ = [
    "ENERGY", "THETA", "EstimatorReport", "born_cdf", "exact_expectation",
    "report_from_counts", "sample_counts", "sample_estimate",
]
