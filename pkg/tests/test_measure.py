import numpy as np
import pytest

from expctl.errors import ValidationError
from expctl.measure import born_cdf, exact_expectation, report_from_counts, sample_estimate
from expctl.system import ENERGY, THETA, State, expectation, probabilities, random_state, random_system


def test_eigenstate_is_deterministic(rng):
    sys = random_system(4, rng)
    for k in range(4):
        rep = sample_estimate(sys, State.basis_state(THETA, 4, k), THETA, 1000, seed=5)
        assert rep.mean == sys.theta_values[k]
        assert rep.stderr == 0
        assert rep.histogram[k] == 1000


def test_bernoulli_ground_state(two_level, ground):
    rep = sample_estimate(two_level, ground, THETA, 10**6, seed=2024)
    assert rep.histogram.sum() == 10**6
    assert abs(rep.stderr - 5e-4) < 1e-6
    assert abs(rep.mean - 0.5) <= 5 * rep.stderr


def test_equal_seeds_bit_identical(two_level, ground):
    a = sample_estimate(two_level, ground, THETA, 12345, seed=9)
    b = sample_estimate(two_level, ground, THETA, 12345, seed=9)
    assert a == b
    c = sample_estimate(two_level, ground, THETA, 12345, seed=10)
    assert a != c
    d = sample_estimate(two_level, ground, THETA, 12345, seed=9, stream=(1,))
    assert a != d


def test_energy_measurement(two_level, ground):
    rep = sample_estimate(two_level, ground, ENERGY, 500, seed=1)
    assert rep.mean == 0.0 and rep.histogram[0] == 500


def test_exact_expectation_delegates(rng):
    sys = random_system(4, rng)
    s = random_state(4, rng)
    assert exact_expectation(sys, s) == expectation(sys, s)
    assert exact_expectation(sys, s, ENERGY) == expectation(sys, s, ENERGY)


def test_large_sample_converges_on_random_systems():
    for seed in range(3):
        g = np.random.default_rng(100 + seed)
        sys = random_system(4, g)
        s = random_state(4, g)
        rep = sample_estimate(sys, s, THETA, 10**7, seed=seed)
        assert abs(rep.mean - exact_expectation(sys, s)) <= 5 * rep.stderr


def test_coverage_of_mean_and_histogram():
    g = np.random.default_rng(77)
    sys = random_system(4, g)
    s = random_state(4, g)
    exact = exact_expectation(sys, s)
    p = probabilities(sys, s, THETA)
    M = 10**4
    mean_hits = 0
    hist_hits = 0
    for trial in range(100):
        rep = sample_estimate(sys, s, THETA, M, seed=trial)
        mean_hits += abs(rep.mean - exact) <= 3 * rep.stderr
        bound = 5 * np.sqrt(p * (1 - p) / M)
        hist_hits += np.all(np.abs(rep.histogram / M - p) <= bound + 1e-15)
    assert mean_hits >= 95
    assert hist_hits >= 95


def test_born_probabilities_valid(rng):
    for _ in range(20):
        sys = random_system(int(rng.integers(2, 8)), rng)
        p = probabilities(sys, random_state(sys.dim, rng), THETA)
        assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12
        cdf = born_cdf(p)
        assert cdf[-1] == 1.0 and np.all(np.diff(cdf) >= 0)


def test_born_cdf_rejects_bad_input():
    with pytest.raises(ValidationError):
        born_cdf([0.5, 0.6])


def test_report_statistics():
    rep = report_from_counts([3, 1], [0.0, 1.0])
    assert rep.mean == 0.25
    assert rep.stderr == pytest.approx(np.std([0, 0, 0, 1], ddof=1) / 2)
    assert report_from_counts([1, 0], [0.0, 1.0]).stderr == 0


def test_shots_must_be_positive(two_level, ground):
    with pytest.raises(ValidationError):
        sample_estimate(two_level, ground, THETA, 0, seed=0)
