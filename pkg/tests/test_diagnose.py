import numpy as np
import pytest

from expctl.control import apply_sequence, compile_correction
from expctl.diagnose import design_matrix, solve_drift, solve_drift_blind
from expctl.drift import EnergyPairExchange, apply_energy_pair_exchange
from expctl.errors import InconsistentObservation, SingularSystem, ValidationError
from expctl.system import ENERGY, THETA, State, build_system, change_basis, expectation, random_state, random_system


def _forward(sys, s, m, n, eps):
    r = apply_energy_pair_exchange(sys, s, EnergyPairExchange(m, n, eps))
    da = change_basis(sys, r.state, THETA).amplitudes.real - change_basis(sys, s, THETA).amplitudes.real
    return r, da


def test_null_observation():
    sys = random_system(4, np.random.default_rng(5), real=True)
    prior = change_basis(sys, State.basis_state(ENERGY, 4, 3), THETA)
    d = solve_drift(sys, prior, 0.0, 0.0, 0, 1)
    assert np.all(d.delta_a == 0) and d.residual == 0 and not d.sign_ambiguous


def test_two_level_example(two_level, ground):
    prior = change_basis(two_level, ground, THETA)
    r, _ = _forward(two_level, ground, 0, 1, 0.01)
    assert abs(r.delta_theta_exact + 0.5 * np.sin(0.02)) < 1e-14
    d = solve_drift(two_level, prior, r.delta_theta_exact, r.delta_energy_exact, 0, 1)
    np.testing.assert_allclose(d.delta_a, [0.01 / np.sqrt(2), -0.01 / np.sqrt(2)], atol=1e-4)
    assert d.residual >= 0 and d.condition >= 1


def test_four_level_round_trip_single_correction():
    g = np.random.default_rng(2)
    sys = random_system(4, g, real=True)
    s = random_state(4, g, THETA, real=True)
    r, _ = _forward(sys, s, 1, 3, 1e-3)
    d = solve_drift(sys, s, r.delta_theta_exact, r.delta_energy_exact, 1, 3)
    seq = compile_correction(sys, d, s, 1, 3)
    out = apply_sequence(seq, change_basis(sys, r.state, ENERGY))
    assert abs(expectation(sys, out) - expectation(sys, s)) < 1e-6


def test_round_trip_second_order(rng):
    for _ in range(25):
        dim = int(rng.integers(2, 7))
        sys = random_system(dim, rng, real=True)
        s = random_state(dim, rng, THETA, real=True)
        m, n = (int(v) for v in rng.choice(dim, size=2, replace=False))
        errs = []
        for eps in (1e-3, 5e-4, 2.5e-4):
            r, da = _forward(sys, s, m, n, eps)
            d = solve_drift(sys, s, r.delta_theta_exact, r.delta_energy_exact, m, n)
            errs.append(np.linalg.norm(d.delta_a - da))
            # energy amplitudes outside the pair do not move
            others = [k for k in range(dim) if k not in (m, n)]
            assert np.max(np.abs(sys.overlap[:, others].T @ d.delta_a), initial=0) <= d.residual + 1e-14
        if errs[0] > 1e-13:
            assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_scaling_linearity(rng):
    sys = random_system(5, rng, real=True)
    s = random_state(5, rng, THETA, real=True)
    r, _ = _forward(sys, s, 0, 2, 1e-4)
    inf = np.inf
    d1 = solve_drift(sys, s, r.delta_theta_exact, r.delta_energy_exact, 0, 2, threshold=inf)
    d2 = solve_drift(sys, s, 2 * r.delta_theta_exact, 2 * r.delta_energy_exact, 0, 2, threshold=inf)
    assert np.linalg.norm(d2.delta_a - 2 * d1.delta_a) <= 1e-8 * np.linalg.norm(d2.delta_a)


def test_singular_system_guard():
    sys = build_system(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))
    prior = State(THETA, np.array([1.0, 0.0]))
    with pytest.raises(SingularSystem):
        solve_drift(sys, prior, 0.01, 0.01, 0, 1)


def test_inconsistent_observation():
    g = np.random.default_rng(8)
    sys = random_system(4, g, real=True)
    s = random_state(4, g, THETA, real=True)
    # observations that no in-plane change can produce
    with pytest.raises(InconsistentObservation):
        solve_drift(sys, s, 1e-3, 0.0, 0, 1)


def test_default_threshold_ordering(two_level, ground):
    prior = change_basis(two_level, ground, THETA)
    r, _ = _forward(two_level, ground, 0, 1, 0.01)
    d = solve_drift(two_level, prior, r.delta_theta_exact, r.delta_energy_exact, 0, 1)
    assert d.residual <= d.threshold
    assert d.threshold >= 1e-6


def test_pair_weighted_rows_mismatch_for_larger_systems(rng):
    first_order = 0
    for _ in range(20):
        sys = random_system(4, rng, real=True)
        s = random_state(4, rng, THETA, real=True)
        errs = []
        for eps in (1e-3, 5e-4, 2.5e-4):
            r, da = _forward(sys, s, 0, 1, eps)
            d = solve_drift(sys, s, r.delta_theta_exact, r.delta_energy_exact, 0, 1,
                            model="pair_weighted", threshold=np.inf)
            errs.append(np.linalg.norm(d.delta_a - da))
        first_order += errs[1] / errs[2] < 3.5
    assert first_order >= 15


def test_pair_weighted_rows_on_two_level_agree_to_first_order(two_level, ground):
    prior = change_basis(two_level, ground, THETA)
    r, da = _forward(two_level, ground, 0, 1, 1e-3)
    d = solve_drift(two_level, prior, r.delta_theta_exact, r.delta_energy_exact, 0, 1,
                    model="pair_weighted", threshold=np.inf)
    assert np.linalg.norm(d.delta_a - da) < 1e-5


def test_design_matrix_shape(rng):
    real = random_system(5, rng, real=True)
    cplx = random_system(5, rng)
    a = random_state(5, rng, THETA, real=True).amplitudes.real
    assert design_matrix(real, a, 0, 1).shape == (6, 5)
    assert design_matrix(cplx, a, 0, 1).shape == (9, 5)
    with pytest.raises(ValidationError):
        design_matrix(real, a, 0, 1, model="bogus")


def test_sign_alternate_fits_as_well(two_level, ground):
    prior = change_basis(two_level, ground, THETA)
    r, _ = _forward(two_level, ground, 0, 1, 0.01)
    d = solve_drift(two_level, prior, r.delta_theta_exact, r.delta_energy_exact, 0, 1)
    if d.sign_ambiguous:
        assert d.alternate is not None
        A = design_matrix(two_level, prior.amplitudes.real, 0, 1)
        rhs = np.array([r.delta_theta_exact, r.delta_energy_exact, 0.0])
        assert np.linalg.norm(A @ d.alternate - rhs) <= 2 * max(d.residual, 1e-15)
    else:
        assert d.alternate is None


def test_invalid_pair(two_level, ground):
    with pytest.raises(ValidationError):
        solve_drift(two_level, change_basis(two_level, ground, THETA), 0.1, 0.1, 0, 0)


def test_blind_search_finds_pair(rng):
    sys = random_system(4, rng, real=True)
    s = random_state(4, rng, THETA, real=True)
    r, da = _forward(sys, s, 1, 2, 1e-3)
    d = solve_drift_blind(sys, s, r.delta_theta_exact, r.delta_energy_exact)
    assert {d.m, d.n} == {1, 2}
    assert np.linalg.norm(d.delta_a - da) < 1e-5
