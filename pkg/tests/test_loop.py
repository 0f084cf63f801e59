import numpy as np
import pytest

from expctl.drift import DriftSchedule, EpsilonSpec
from expctl.errors import ValidationError
from expctl.loop import ControllerConfig, run_closed_loop, run_sweep
from expctl.system import ENERGY, THETA, State, change_basis, expectation, random_state, random_system

CONST = EpsilonSpec("constant", 0.01)


def _scenario(seed, N):
    g = np.random.default_rng(seed)
    sys = random_system(N, g, real=True)
    s = random_state(N, g, THETA, real=True)
    m, n = (int(v) for v in g.choice(N, size=2, replace=False))
    return sys, s, (m, n)


def test_quiescent_loop(two_level, ground):
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=EpsilonSpec("none")),
                        ControllerConfig(), 20)
    for log in r.logs:
        assert log.pulses_applied == 0 and log.drift_event is None
        assert log.theta_true_before == log.theta_true_after_drift == log.theta_after_correction
        assert abs(log.theta_after_correction - 0.5) < 1e-12
    assert r.failures == 0 and r.max_deviation < 1e-12


def test_two_level_closed_loop(two_level, ground):
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=CONST), ControllerConfig(), 100)
    assert r.target_theta == pytest.approx(0.5, abs=1e-15)
    assert r.failures == 0
    assert all(abs(log.theta_after_correction - 0.5) <= 1e-6 for log in r.logs)
    assert abs(r.time_avg_theta - 0.5) <= 1e-6
    assert all(log.drift_event == (0, 1, 0.01) and log.pulses_applied >= 1 for log in r.logs)


def test_uncorrected_baseline_drifts_monotonically(two_level, ground):
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=CONST),
                        ControllerConfig(correction_threshold=np.inf), 10)
    theta = [log.theta_after_correction for log in r.logs]
    assert all(b < a for a, b in zip([0.5] + theta, theta))
    assert abs(theta[-1] - 0.5) >= 1e-2
    assert all(log.pulses_applied == 0 for log in r.logs)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_exact_mode_deviation_bound(N):
    for seed in range(6):
        sys, s, pair = _scenario(100 * N + seed, N)
        for eps in (EpsilonSpec("constant", 1e-2), EpsilonSpec("normal", std=1e-2)):
            r = run_closed_loop(sys, s, DriftSchedule(seed=seed, epsilon=eps, pair=pair), ControllerConfig(), 30)
            assert r.failures == 0
            for log in r.logs:
                e = abs(log.drift_event[2])
                assert abs(log.theta_after_correction - r.target_theta) <= 10 * max(e, 1e-2) ** 2


def test_sampled_mode_statistical_band():
    hits = 0
    for trial in range(100):
        sys, s, pair = _scenario(trial, 3)
        cfg = ControllerConfig(measurement_mode="sampled", shots=10_000, seed=trial)
        r = run_closed_loop(sys, s, DriftSchedule(seed=trial, epsilon=CONST, pair=pair), cfg, 3)
        p = np.abs(change_basis(sys, s, THETA).amplitudes) ** 2
        stderr = np.sqrt(p @ sys.theta_values ** 2 - (p @ sys.theta_values) ** 2) / np.sqrt(cfg.shots)
        dev = abs(r.logs[-1].theta_after_correction - r.target_theta)
        hits += dev <= 5 * stderr + 10 * 0.01 ** 2
    assert hits >= 95


def test_clone_budget_exhaustion(two_level, ground):
    cfg = ControllerConfig(measurement_mode="sampled", shots=100, clone_budget=500)
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=CONST), cfg, 5)
    assert r.clones_used <= 500
    assert any(log.failure and "CloneBudgetExhausted" in log.failure for log in r.logs)


def test_failures_are_logged_and_loop_continues(two_level, ground):
    cfg = ControllerConfig(diagnosis_threshold=0.0)
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=CONST), cfg, 5)
    assert r.epochs == 5 and len(r.logs) == 5
    assert r.failures >= 1
    assert all("InconsistentObservation" in log.failure for log in r.logs if log.failure)


def test_determinism_and_sweep(two_level, ground):
    sch = DriftSchedule(seed=3, epsilon=EpsilonSpec("normal", std=0.02))
    cfg = ControllerConfig(measurement_mode="sampled", shots=2000, seed=11)
    a = run_closed_loop(two_level, ground, sch, cfg, 20)
    b = run_closed_loop(two_level, ground, sch, cfg, 20)
    assert a.logs == b.logs
    jobs = [(two_level, ground, DriftSchedule(seed=k, epsilon=CONST), cfg, 8) for k in range(3)]
    seq = run_sweep(jobs, workers=1)
    par = run_sweep(jobs, workers=2)
    assert [r.logs for r in seq] == [r.logs for r in par]


def test_blind_mode_recovers_pair():
    sys, s, pair = _scenario(5, 4)
    r = run_closed_loop(sys, s, DriftSchedule(seed=1, epsilon=EpsilonSpec("constant", 1e-3), pair=pair),
                        ControllerConfig(blind=True), 10)
    assert r.failures == 0 and r.max_deviation <= 1e-5


def test_sign_fallback_recovers_from_wrong_primary(two_level, ground, monkeypatch):
    import expctl.loop as loop

    real = loop._diagnose_and_correct

    def swapped(*args):
        diag, seq, alt = real(*args)
        return diag, seq.inverse(), seq

    monkeypatch.setattr(loop, "_diagnose_and_correct", swapped)
    r = run_closed_loop(two_level, ground, DriftSchedule(seed=0, epsilon=CONST),
                        ControllerConfig(max_corrections_per_epoch=1), 3)
    assert all(log.fallback_used for log in r.logs)
    assert r.max_deviation < 1e-4


def test_long_run_keeps_normalization(two_level, ground):
    # every State is checked against a 1e-10 norm tolerance on construction
    sch = DriftSchedule(seed=9, epsilon=EpsilonSpec("normal", std=0.01))
    r = run_closed_loop(two_level, ground, sch, ControllerConfig(), 10_000)
    assert r.failures == 0
    assert r.max_deviation <= 1e-6


def test_normalization_every_epoch(rng):
    sys, s, pair = _scenario(42, 4)
    import expctl.loop as loop
    seen = []
    real_apply = loop.apply_sequence

    def spy(seq, st):
        out = real_apply(seq, st)
        seen.append(abs(np.linalg.norm(out.amplitudes) - 1))
        return out

    loop.apply_sequence = spy
    try:
        run_closed_loop(sys, s, DriftSchedule(seed=4, epsilon=CONST, pair=pair), ControllerConfig(), 200)
    finally:
        loop.apply_sequence = real_apply
    assert seen and max(seen) < 1e-10


def test_config_validation(two_level, ground):
    with pytest.raises(ValidationError):
        ControllerConfig(correction_threshold=-1)
    with pytest.raises(ValidationError):
        ControllerConfig(measurement_mode="weak")
    with pytest.raises(ValidationError):
        ControllerConfig(measurement_mode="sampled", shots=0)
    with pytest.raises(ValidationError):
        run_closed_loop(two_level, ground, DriftSchedule(seed=0), ControllerConfig(), 0)
    with pytest.raises(ValidationError):
        run_closed_loop(two_level, State.normalized(THETA, [1, 1j]), DriftSchedule(seed=0), ControllerConfig(), 1)
