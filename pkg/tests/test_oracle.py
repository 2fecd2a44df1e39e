import itertools
import math

import numpy as np
import pytest

from conftest import random_config
from itree.circuit import statevector_run
from itree.errors import KeyMismatch, LengthMismatch, TooLarge
from itree.model import config_from_probabilities, benchmark_config
from itree.oracle import (
    BRUTE_FORCE_MAX_N,
    brute_force_distribution,
    exact_observable_expectation,
    leaf_amplitude,
    matrix_product_distribution,
    observable_marginal,
)
from itree.outcomes import OutcomeDistribution, path_to_int

# hand statevector computation for N=1, lambda=pi/4, p_down=0.8, p_up=0.5, a=1:
# the rotated spin is (1, 1)/sqrt(2); the left amplitude on spin 0 after rotating back
# is (sqrt(.8) + sqrt(.5)) / 2, and so on.
_C_D, _C_U, _S_D, _S_U = math.sqrt(0.8), math.sqrt(0.5), math.sqrt(0.2), math.sqrt(0.5)
QUARTER_TURN_N1 = {
    ((1,), 0): ((_C_D + _C_U) / 2) ** 2,
    ((0,), 0): ((_S_D + _S_U) / 2) ** 2,
    ((1,), 1): ((_C_U - _C_D) / 2) ** 2,
    ((0,), 1): ((_S_U - _S_D) / 2) ** 2,
}


def test_hand_values_match_rounded_table():
    assert QUARTER_TURN_N1[((1,), 0)] == pytest.approx(0.6412, abs=5e-5)
    assert QUARTER_TURN_N1[((0,), 0)] == pytest.approx(0.3331, abs=5e-5)
    assert QUARTER_TURN_N1[((1,), 1)] == pytest.approx(0.0088, abs=5e-5)
    assert QUARTER_TURN_N1[((0,), 1)] == pytest.approx(0.0169, abs=5e-5)


class TestLeafAmplitude:
    def test_single_left_step(self):
        c = config_from_probabilities(1, 0.0, 0.8, 0.5)
        v = leaf_amplitude(c, [1])
        assert v.down == pytest.approx(math.sqrt(0.8), abs=1e-15)
        assert v.up == 0.0

    def test_two_right_steps(self):
        c = config_from_probabilities(2, 0.0, [0.8, 0.3], 0.5)
        v = leaf_amplitude(c, [0, 0])
        assert v.down == pytest.approx(math.sqrt(0.2) * math.sqrt(0.7), abs=1e-15)
        assert v.up == 0.0

    def test_matches_brute_force(self):
        c = config_from_probabilities(2, 0.5, 0.8, 0.5)
        dist = brute_force_distribution(c)
        for path in itertools.product((0, 1), repeat=2):
            v = leaf_amplitude(c, path)
            assert dist.prob(path, 0) == pytest.approx(v.down**2, abs=1e-14)
            assert dist.prob(path, 1) == pytest.approx(v.up**2, abs=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            leaf_amplitude(config_from_probabilities(2, 0.0, 0.5, 0.5), [1])


class TestBruteForce:
    def test_decoupled_single_step(self):
        dist = brute_force_distribution(config_from_probabilities(1, 0.0, 0.8, 0.5))
        assert dist.prob((1,), 0) == pytest.approx(0.8, abs=1e-15)
        assert dist.prob((0,), 0) == pytest.approx(0.2, abs=1e-15)
        assert dist.prob((1,), 1) == 0.0 and dist.prob((0,), 1) == 0.0

    @pytest.mark.parametrize("oracle", [brute_force_distribution, matrix_product_distribution, statevector_run])
    def test_quarter_turn_single_step(self, oracle):
        dist = oracle(config_from_probabilities(1, math.pi / 4, 0.8, 0.5))
        for (path, spin), p in QUARTER_TURN_N1.items():
            assert dist.prob(path, spin) == pytest.approx(p, abs=1e-12)

    def test_normalized(self, rng):
        for n in range(1, 9):
            assert brute_force_distribution(random_config(rng, n)).is_normalized()

    def test_guard(self):
        with pytest.raises(TooLarge):
            brute_force_distribution(config_from_probabilities(BRUTE_FORCE_MAX_N + 1, 0.1, 0.5, 0.5))

    @pytest.mark.slow
    def test_largest_allowed_size_completes(self):
        dist = brute_force_distribution(config_from_probabilities(BRUTE_FORCE_MAX_N, 0.5, 0.8, 0.5))
        assert dist.is_normalized()


class TestMatrixProduct:
    def test_agrees_with_brute_force(self, rng):
        for _ in range(20):
            c = random_config(rng, int(rng.integers(1, 9)))
            assert matrix_product_distribution(c).max_abs_diff(brute_force_distribution(c)) < 1e-10

    def test_all_right_leaf(self):
        c = config_from_probabilities(2, 0.7, [0.8, 0.3], [0.5, 0.6], 0.6)
        f = c.initial_spin
        for _, right in c.step_matrices():
            f = right @ f
        dist = matrix_product_distribution(c)
        assert dist.prob((0, 0), 0) == pytest.approx(f[0] ** 2, abs=1e-15)
        assert dist.prob((0, 0), 1) == pytest.approx(f[1] ** 2, abs=1e-15)

    def test_decoupled_factorizes(self):
        p_down = [0.8, 0.3, 0.6, 0.9]
        dist = matrix_product_distribution(config_from_probabilities(4, 0.0, p_down, 0.5))
        for path in itertools.product((0, 1), repeat=4):
            expected = math.prod(p if b else 1 - p for p, b in zip(p_down, path))
            assert dist.prob(path, 0) == pytest.approx(expected, abs=1e-15)
            assert dist.prob(path, 1) == 0.0

    def test_decoupled_spin_up_tree(self):
        dist = matrix_product_distribution(config_from_probabilities(3, 0.0, 0.8, 0.3, 0.0))
        for path in itertools.product((0, 1), repeat=3):
            expected = math.prod(0.3 if b else 0.7 for b in path)
            assert dist.prob(path, 1) == pytest.approx(expected, abs=1e-15)

    def test_decoupled_permutation_invariance(self):
        dist = matrix_product_distribution(config_from_probabilities(5, 0.0, 0.7, 0.4, 0.6))
        for path in itertools.product((0, 1), repeat=5):
            for k in range(4):
                swapped = list(path)
                swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
                for spin in (0, 1):
                    assert dist.prob(path, spin) == pytest.approx(dist.prob(swapped, spin), abs=1e-15)

    def test_guard(self):
        with pytest.raises(TooLarge):
            matrix_product_distribution(config_from_probabilities(25, 0.1, 0.5, 0.5))


class TestExpectations:
    def test_decoupled_closed_forms(self):
        dist = matrix_product_distribution(benchmark_config(lam=0.0))
        assert exact_observable_expectation(dist, "num-left-branches") == pytest.approx(16.0, abs=1e-10)
        geometric = sum(k * 0.2 ** (k - 1) * 0.8 for k in range(1, 21)) + 21 * 0.2**20
        assert geometric == pytest.approx(1.25, abs=1e-12)
        assert exact_observable_expectation(dist, "first-left-depth") == pytest.approx(geometric, abs=1e-10)

    def test_point_mass(self):
        n = 4
        probs = np.zeros(1 << (n + 1))
        path = (0, 0, 1, 1)
        probs[1 + 2 * path_to_int(path)] = 1.0
        dist = OutcomeDistribution(n, probs)
        assert exact_observable_expectation(dist, "first-left-depth") == 3
        assert exact_observable_expectation(dist, "num-left-branches") == 2

    def test_marginal_sums_to_one(self):
        dist = matrix_product_distribution(config_from_probabilities(6, 0.5, 0.8, 0.5))
        values, probs = observable_marginal(dist, "first-left-depth")
        assert list(values) == list(range(1, 8))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


class TestSerialization:
    def test_csv_round_trip(self, rng):
        dist = matrix_product_distribution(random_config(rng, 3))
        back = OutcomeDistribution.from_csv(dist.to_csv())
        np.testing.assert_array_equal(back.probs, dist.probs)

    def test_csv_layout(self):
        text = matrix_product_distribution(config_from_probabilities(2, 0.0, 0.8, 0.5)).to_csv()
        lines = text.splitlines()
        assert lines[0] == "path,spin,probability"
        assert len(lines) == 1 + 8
        assert lines[1].startswith("00,0,")

    def test_key_mismatch(self):
        a = matrix_product_distribution(config_from_probabilities(2, 0.0, 0.8, 0.5))
        b = matrix_product_distribution(config_from_probabilities(3, 0.0, 0.8, 0.5))
        with pytest.raises(KeyMismatch):
            a.max_abs_diff(b)
