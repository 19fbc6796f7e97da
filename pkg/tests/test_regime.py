import numpy as np
import pytest

from occupancy import LetterDistribution as L
from occupancy.errors import UnsupportedOperation
from occupancy.regime import (RegimePath, build_model, conditional_occupancy,
                              conditional_occupancy_all, letter_frequencies, occupancy_stats,
                              simulate)

M1 = [[0.9, 0.1], [0.2, 0.8]]


def test_build_requires_every_regime():
    with pytest.raises(ValueError):
        build_model(M1, {0: L.uniform(2)})


def test_build_rejects_extra_regime():
    with pytest.raises(ValueError):
        build_model(M1, {0: L.uniform(2), 1: L.uniform(2), 2: L.uniform(2)})


def test_build_default_initial_is_stationary(m1_uniform):
    np.testing.assert_allclose(m1_uniform.initial, [2 / 3, 1 / 3])


def test_single_state_is_iid():
    model = build_model([[1.0]], [L.uniform(2)])
    path = simulate(model, 100_000, 5)
    assert np.all(path.X == 0)
    freq = np.mean(path.K == 1)
    assert abs(freq - 0.5) < 5 * np.sqrt(0.25 / 100_000)


def test_driver_marginal(m1_uniform):
    path = simulate(m1_uniform, 100_000, 11)
    # asymptotic variance of the state-0 frequency for a two-state chain:
    # pi0 pi1 (1 + rho) / (1 - rho) with rho = 1 - 0.1 - 0.2
    var = (2 / 9) * 1.7 / 0.3 / 100_000
    assert abs(np.mean(path.X == 0) - 2 / 3) < 5 * np.sqrt(var)


def test_letters_follow_regime(m1_uniform):
    path = simulate(m1_uniform, 50_000, 3)
    f0, n0 = letter_frequencies(path, 0, [1, 2, 3])
    f1, n1 = letter_frequencies(path, 1, [1, 2, 3])
    assert f0[2] == 0.0
    np.testing.assert_allclose(f0[:2], 0.5, atol=5 * np.sqrt(0.25 / n0))
    np.testing.assert_allclose(f1, 1 / 3, atol=5 * np.sqrt(2 / 9 / n1))


def test_simulate_repeatable(m1_zipf):
    a, b = simulate(m1_zipf, 1000, 9), simulate(m1_zipf, 1000, 9)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.K, b.K)


@pytest.mark.parametrize("pairs,L_n,cal", [
    ([(0, 1), (0, 1), (0, 1)], 2, 2),
    ([(0, 1), (0, 2), (0, 1)], 2, 1),
    ([(0, 1), (1, 1), (0, 2)], 1, 0),
])
def test_occupancy_stats(pairs, L_n, cal):
    s = occupancy_stats(RegimePath.from_pairs(pairs), 2)
    assert (s.L_n, s.cal_L_n) == (L_n, cal)


def test_same_letter_other_regime_not_counted():
    s = occupancy_stats(RegimePath.from_pairs([(1, 1), (0, 1)]), 1)
    assert s.cal_L_n == 0


def test_conditional_single_state():
    model = build_model([[1.0]], [L.uniform(2)])
    assert conditional_occupancy(model, [(0, 1)], 0) == pytest.approx(0.5)


def test_conditional_m1(m1_uniform):
    assert conditional_occupancy(m1_uniform, [(0, 1)], 0) == pytest.approx(0.55)


def test_conditional_impossible_count(m1_uniform):
    assert conditional_occupancy(m1_uniform, [(0, 1), (1, 2)], 3) == 0.0


def test_conditional_sums_to_one(m1_zipf):
    path = simulate(m1_zipf, 40, 2)
    assert conditional_occupancy_all(m1_zipf, path).sum() == pytest.approx(1.0, abs=1e-12)


def test_hook_driver():
    def hook(rng, length, size):
        return np.tile(np.arange(length) % 2, (size, 1))

    model = build_model((hook, 2), [L.uniform(2), L.uniform(3)])
    path = simulate(model, 6, 0)
    assert list(path.X) == [0, 1, 0, 1, 0, 1]
    with pytest.raises(UnsupportedOperation):
        conditional_occupancy(model, path, 0)


def test_csv_rows_one_based(m1_uniform):
    rows = simulate(m1_uniform, 3, 0).csv_rows()
    assert [r[0] for r in rows] == [1, 2, 3]
