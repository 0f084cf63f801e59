"""Closed-loop control of the observable's expectation value.

Each epoch runs drift -> measure -> (diagnose -> correct -> verify)*.
The controller keeps a model of the state it is defending (the reference
state); observed shifts are always taken relative to that model, so
residual errors from earlier epochs are folded into the next diagnosis
instead of accumulating.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import rng as _rng
from .control import apply_sequence, compile_correction
from .diagnose import solve_drift, solve_drift_blind
from .drift import DriftSchedule, apply_energy_pair_exchange, next_drift
from .errors import CloneBudgetExhausted, ControllerFailure, NoCorrection, ValidationError
from .measure import exact_expectation, sample_estimate
from .system import ENERGY, THETA, QuantumSystem, State, change_basis


@dataclass(frozen=True)
class ControllerConfig:
    """Controller settings.

    ``correction_threshold`` is the estimated deviation from
    ``target_theta`` that triggers a correction (``inf`` disables the
    controller).  ``max_corrections_per_epoch`` bounds the
    diagnose-correct-verify cycles run inside one epoch.
    """

    target_theta: Optional[float] = None
    correction_threshold: float = 1e-6
    measurement_mode: str = "exact"
    shots: int = 10_000
    seed: int = 0
    verify_after_correction: bool = True
    sign_fallback: bool = True
    max_corrections_per_epoch: int = 3
    blind: bool = False
    clone_budget: Optional[int] = None
    diagnosis_threshold: Optional[float] = None

    def __post_init__(self):
        if not self.correction_threshold >= 0:
            raise ValidationError("correction_threshold must be >= 0")
        if self.measurement_mode not in ("exact", "sampled"):
            raise ValidationError(f"unknown measurement mode {self.measurement_mode!r}")
        if self.measurement_mode == "sampled" and self.shots < 1:
            raise ValidationError("shots must be >= 1 in sampled mode")
        if self.max_corrections_per_epoch < 0:
            raise ValidationError("max_corrections_per_epoch must be >= 0")


@dataclass
class EpochLog:
    epoch: int
    drift_event: Optional[Tuple[int, int, float]]
    theta_true_before: float
    theta_true_after_drift: float
    theta_estimated: float
    theta_after_correction: float
    energy_true: float
    diagnosis_residual: Optional[float]
    pulses_applied: int
    fallback_used: bool
    failure: Optional[str] = None


@dataclass
class LoopResult:
    logs: List[EpochLog]
    time_avg_theta: float
    max_deviation: float
    rms_deviation: float
    epochs: int
    failures: int
    clones_used: int = 0
    target_theta: float = 0.0

    def summary(self):
        return {
            "time_avg_theta": self.time_avg_theta,
            "max_deviation": self.max_deviation,
            "rms_deviation": self.rms_deviation,
            "epochs": self.epochs,
            "failures": self.failures,
        }


@dataclass(frozen=True)
class _Reading:
    theta: float
    energy: float
    theta_se: float = 0.0
    energy_se: float = 0.0

    @property
    def noise(self):
        return float(np.hypot(self.theta_se, self.energy_se))


class _Meter:
    """Measurement front end with clone accounting."""

    def __init__(self, sys, cfg):
        self.sys = sys
        self.cfg = cfg
        self.used = 0

    def __call__(self, s, epoch, round_):
        if self.cfg.measurement_mode == "exact":
            return _Reading(exact_expectation(self.sys, s, THETA), exact_expectation(self.sys, s, ENERGY))
        M = self.cfg.shots
        if self.cfg.clone_budget is not None and self.used + 2 * M > self.cfg.clone_budget:
            raise CloneBudgetExhausted(f"clone budget {self.cfg.clone_budget} exhausted")
        self.used += 2 * M
        words = (epoch, round_)
        th = sample_estimate(self.sys, s, THETA, M, self.cfg.seed, words)
        en = sample_estimate(self.sys, s, ENERGY, M, self.cfg.seed, words)
        return _Reading(th.mean, en.mean, th.stderr, en.stderr)


# Shifts smaller than this many standard errors are treated as noise.
_NOISE_SIGMAS = 5.0
_ENERGY_SIGMAS = 3.0


def _diagnose_and_correct(sys, cfg, model, reading, ref_theta, ref_energy, pair):
    dth = reading.theta - ref_theta
    den = reading.energy - ref_energy
    kw = {"threshold": cfg.diagnosis_threshold, "noise": _NOISE_SIGMAS * reading.noise}
    if pair is None:
        diag = solve_drift_blind(sys, model, dth, den, **kw)
    else:
        diag = solve_drift(sys, model, dth, den, pair[0], pair[1], **kw)
    seq = compile_correction(sys, diag, model, diag.m, diag.n)
    alt = None
    if diag.sign_ambiguous and diag.alternate is not None:
        try:
            alt = compile_correction(sys, diag, model, diag.m, diag.n, delta_a=diag.alternate)
        except (NoCorrection, ControllerFailure):
            alt = None
    return diag, seq, alt


class _Deviation:
    """Distance of a reading from the defended values.

    Theta is the controlled quantity.  Once a correction has started, the
    energy offset is also driven below threshold: a rotation that restores
    <Theta> but leaves <H> off would otherwise poison the next diagnosis.
    """

    def __init__(self, cfg, target, ref_energy):
        self.thr = cfg.correction_threshold
        self.target = target
        self.ref_energy = ref_energy

    def theta(self, r):
        return abs(r.theta - self.target)

    def energy_excess(self, r):
        allowed = max(self.thr, _ENERGY_SIGMAS * r.energy_se)
        return max(abs(r.energy - self.ref_energy) - allowed, 0.0)

    def settled(self, r):
        return self.theta(r) <= self.thr and self.energy_excess(r) == 0.0

    def improved(self, new, old):
        if self.theta(new) <= self.theta(old):
            return True
        return self.theta(new) <= self.thr and self.energy_excess(new) < self.energy_excess(old)


def run_closed_loop(sys: QuantumSystem, initial: State, schedule: DriftSchedule,
                    cfg: ControllerConfig, epochs: int) -> LoopResult:
    if epochs < 1:
        raise ValidationError("epochs must be >= 1")
    model = change_basis(sys, initial, THETA)
    if not model.is_real():
        raise ValidationError("closed loop needs an initial state with real theta amplitudes")
    ref_theta = exact_expectation(sys, model, THETA)
    ref_energy = exact_expectation(sys, model, ENERGY)
    target = ref_theta if cfg.target_theta is None else float(cfg.target_theta)
    deviation = _Deviation(cfg, target, ref_energy)
    meter = _Meter(sys, cfg)
    state = change_basis(sys, initial, ENERGY)
    last_pair = schedule.pair
    logs = []
    for epoch in range(epochs):
        before = exact_expectation(sys, state, THETA)
        event = next_drift(schedule, epoch)
        if event is not None:
            state = apply_energy_pair_exchange(sys, state, event).state
            last_pair = (event.m, event.n)
        after_drift = exact_expectation(sys, state, THETA)
        pair = None if cfg.blind else last_pair
        failure = None
        residual = None
        pulses = 0
        fallback = False
        est_theta = np.nan
        try:
            reading = meter(state, epoch, 0)
            est_theta = reading.theta
            triggered = deviation.theta(reading) > cfg.correction_threshold
            for round_ in range(1, cfg.max_corrections_per_epoch + 1):
                if not triggered or deviation.settled(reading):
                    break
                try:
                    diag, seq, alt = _diagnose_and_correct(
                        sys, cfg, model, reading, ref_theta, ref_energy, pair)
                except NoCorrection:
                    break
                residual = diag.residual
                trial = apply_sequence(seq, state)
                pulses += len(seq)
                new = meter(trial, epoch, 2 * round_)
                if not cfg.verify_after_correction or deviation.improved(new, reading):
                    state, reading = trial, new
                    continue
                # correction made things worse: undo it, then try the other sign
                state = apply_sequence(seq.inverse(), trial)
                pulses += len(seq)
                if cfg.sign_fallback and alt is not None:
                    trial = apply_sequence(alt, state)
                    pulses += len(alt)
                    new = meter(trial, epoch, 2 * round_ + 1)
                    if deviation.improved(new, reading):
                        fallback = True
                        state, reading = trial, new
                        continue
                    state = apply_sequence(alt.inverse(), trial)
                    pulses += len(alt)
                break
        except ControllerFailure as exc:
            failure = f"{type(exc).__name__}: {exc}"
        logs.append(EpochLog(
            epoch=epoch,
            drift_event=None if event is None else (event.m, event.n, event.epsilon),
            theta_true_before=before,
            theta_true_after_drift=after_drift,
            theta_estimated=float(est_theta),
            theta_after_correction=exact_expectation(sys, state, THETA),
            energy_true=exact_expectation(sys, state, ENERGY),
            diagnosis_residual=residual,
            pulses_applied=pulses,
            fallback_used=fallback,
            failure=failure,
        ))
    post = np.array([log.theta_after_correction for log in logs])
    dev = post - target
    return LoopResult(
        logs=logs,
        time_avg_theta=float(np.mean(post)),
        max_deviation=float(np.max(np.abs(dev))),
        rms_deviation=float(np.sqrt(np.mean(dev**2))),
        epochs=epochs,
        failures=sum(log.failure is not None for log in logs),
        clones_used=meter.used,
        target_theta=target,
    )


def _run_job(job):
    return run_closed_loop(*job)


def run_sweep(jobs: Sequence[tuple], workers: int = 1) -> List[LoopResult]:
    """Run independent ``(sys, initial, schedule, cfg, epochs)`` jobs.

    Runs share no state, so ``workers > 1`` gives the same results as a
    sequential sweep.
    """
    if workers <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_job, jobs))
