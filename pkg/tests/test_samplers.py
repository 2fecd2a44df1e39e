import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_config
from itree.analysis import tv_distance, tv_noise_floor
from itree.circuit import statevector_run
from itree.errors import DegenerateBranch, TooLarge
from itree.model import config_from_probabilities, benchmark_config
from itree.oracle import brute_force_distribution, matrix_product_distribution
from itree.rng import draws_for
from itree.samplers import (
    OpCounter,
    TwoQubitState,
    enumerate_two_qubit_distribution,
    naive_mcmc_distribution,
    naive_mcmc_sample,
    qica_event,
    qica_literal_sample,
    qica_sample,
    sample,
    step_unitary,
    two_qubit_sample,
    two_qubit_step,
)

unit = st.floats(0.0, 1.0, exclude_max=True)
angle = st.floats(0.0, math.pi / 2)


class TestTwoQubitStep:
    def test_certain_left(self):
        bit, nxt, (p0, p1) = two_qubit_step(TwoQubitState.reduced(1.0, 0.0), step_unitary(0.0, 0.0), 0.3)
        assert p1 == pytest.approx(1.0, abs=1e-15) and p0 == pytest.approx(0.0, abs=1e-15)
        assert bit == 1
        assert nxt.amps == pytest.approx((1.0, 0.0, 0.0, 0.0), abs=1e-15)

    def test_decoupled_bernoulli(self):
        th = math.acos(math.sqrt(0.8))
        state = TwoQubitState.reduced(1.0, 0.0)
        u = step_unitary(th, 0.3)
        for draw in (0.1, 0.5, 0.9, 0.05):
            bit, state, (p0, p1) = two_qubit_step(state, u, draw)
            assert p1 == pytest.approx(0.8, abs=1e-14)
            assert p0 == pytest.approx(0.2, abs=1e-14)
            assert bit == (0 if draw < p0 else 1)
            assert state.is_reduced()

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 2 * math.pi), angle, angle, unit)
    def test_probabilities_sum_to_one(self, phi, th_down, th_up, draw):
        state = TwoQubitState.reduced(math.cos(phi), math.sin(phi))
        bit, nxt, (p0, p1) = two_qubit_step(state, step_unitary(th_down, th_up), draw)
        assert p0 + p1 == pytest.approx(1.0, abs=1e-12)
        assert nxt.is_reduced()
        assert nxt.norm == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_branch(self):
        # a zero vector leaves both branches empty
        with pytest.raises(DegenerateBranch):
            two_qubit_step(TwoQubitState((0.0, 0.0, 0.0, 0.0)), step_unitary(0.3, 0.4), 0.5)


class TestTwoQubitSample:
    def test_decoupled_spin_never_flips(self):
        events = two_qubit_sample(config_from_probabilities(10, 0.0, 0.8, 0.5, seed=4), 20000)
        assert not events.spin.any()

    def test_deterministic(self):
        c = benchmark_config(0.5, seed=9)
        assert two_qubit_sample(c, 3000) == two_qubit_sample(c, 3000)

    def test_thread_independent(self):
        c = benchmark_config(0.5, seed=9)
        assert two_qubit_sample(c, 9000, threads=1) == two_qubit_sample(c, 9000, threads=3)

    def test_prefix_stable(self):
        c = benchmark_config(0.5, seed=2)
        full = two_qubit_sample(c, 5000)
        head = two_qubit_sample(c, 100)
        np.testing.assert_array_equal(full.path[:100], head.path)
        np.testing.assert_array_equal(full.spin[:100], head.spin)

    @pytest.mark.slow
    @pytest.mark.parametrize("method", ["two-qubit", "qica"])
    def test_large_sample_close_to_exact(self, method):
        c = config_from_probabilities(4, 0.5, 0.8, 0.5, seed=21)
        n = 10**6 if method == "two-qubit" else 2 * 10**5
        events = sample(method, c, n)
        exact = statevector_run(c)
        assert tv_distance(events.empirical(), exact) < max(0.005, 3 * tv_noise_floor(exact, n))


class TestQica:
    def test_certain_left(self):
        events = qica_sample(config_from_probabilities(7, 0.0, 1.0, 0.5, seed=1), 500)
        assert events.path.all()
        assert not events.spin.any()

    def test_matches_two_qubit(self):
        c = config_from_probabilities(8, 0.7, [0.9, 0.1, 0.5, 0.3, 0.6, 0.8, 0.2, 0.4], 0.35, 0.3, seed=17)
        assert qica_sample(c, 5000) == two_qubit_sample(c, 5000)

    def test_single_event_from_draw_row(self):
        c = benchmark_config(0.5, seed=5)
        draws = draws_for(c.seed, 3, c.n_steps)
        events = two_qubit_sample(c, 3)
        us = [tuple(map(tuple, step_unitary(d, u))) for d, u in zip(c.decoupled.theta_down, c.decoupled.theta_up)]
        for i in range(3):
            spin, path = qica_event(draws[i].tolist(), us, c.lam, c.initial_a)
            assert spin == events.spin[i]
            assert path == events.path[i].tolist()

    def test_cost_linear_in_steps(self):
        per_event = []
        for n in (5, 10, 20, 40):
            counter = OpCounter()
            qica_sample(config_from_probabilities(n, 0.5, 0.8, 0.5), 50, counter=counter)
            per_event.append(counter.flops / 50)
            assert counter.steps == 50 * n
        slopes = np.diff(per_event) / np.diff([5, 10, 20, 40])
        assert np.allclose(slopes, slopes[0])
        intercept = per_event[0] - slopes[0] * 5
        assert intercept >= 0

    def test_literal_skips_rotation(self):
        c = benchmark_config(0.5, seed=3)
        lit = qica_literal_sample(c, 4000)
        ref = qica_sample(c.with_lambda(0.0), 4000)
        # without rotations the decoupled dynamics are sampled from the unrotated spin
        assert lit == ref
        assert lit != qica_sample(c, 4000)

    def test_literal_enumeration_matches_decoupled(self):
        c = config_from_probabilities(5, 0.5, 0.8, 0.5, 0.6)
        lit = enumerate_two_qubit_distribution(c, literal=True)
        assert lit.max_abs_diff(matrix_product_distribution(c.with_lambda(0.0))) < 1e-12


class TestEnumeration:
    def test_matches_oracles(self, rng):
        for _ in range(20):
            c = random_config(rng, int(rng.integers(1, 9)))
            enum = enumerate_two_qubit_distribution(c)
            assert enum.max_abs_diff(brute_force_distribution(c)) < 1e-10
            assert enum.max_abs_diff(statevector_run(c)) < 1e-10
            assert enum.is_normalized()

    def test_quarter_turn_single_step(self):
        enum = enumerate_two_qubit_distribution(config_from_probabilities(1, math.pi / 4, 0.8, 0.5))
        assert enum.prob((1,), 0) == pytest.approx(((math.sqrt(0.8) + math.sqrt(0.5)) / 2) ** 2, abs=1e-12)
        assert enum.prob((0,), 1) == pytest.approx(((math.sqrt(0.5) - math.sqrt(0.2)) / 2) ** 2, abs=1e-12)

    def test_guard(self):
        with pytest.raises(TooLarge):
            enumerate_two_qubit_distribution(config_from_probabilities(15, 0.5, 0.8, 0.5))


class TestNaiveMcmc:
    @pytest.mark.parametrize("lam", [0.0, math.pi / 2])
    def test_interference_free_endpoints(self, lam):
        c = config_from_probabilities(6, lam, 0.8, 0.5, 0.6)
        assert tv_distance(naive_mcmc_distribution(c), matrix_product_distribution(c)) < 1e-10

    def test_interference_gap(self):
        c = config_from_probabilities(4, 0.5, 0.8, 0.5)
        assert tv_distance(naive_mcmc_distribution(c), matrix_product_distribution(c)) > 0.05

    def test_decoupled_step_probability(self):
        events = naive_mcmc_sample(config_from_probabilities(1, 0.0, 0.8, 0.5, seed=8), 100000)
        p = events.path[:, 0].mean()
        assert abs(p - 0.8) < 4 * math.sqrt(0.8 * 0.2 / 100000)
        assert not events.spin.any()

    def test_sampler_matches_its_enumeration(self):
        c = config_from_probabilities(4, 0.5, 0.8, 0.5, 0.7, seed=13)
        n = 200000
        exact = naive_mcmc_distribution(c)
        assert exact.is_normalized()
        assert tv_distance(naive_mcmc_sample(c, n).empirical(), exact) < 3 * tv_noise_floor(exact, n)

    def test_deterministic(self):
        c = benchmark_config(0.5, seed=4)
        assert naive_mcmc_sample(c, 3000) == naive_mcmc_sample(c, 3000)


def test_sample_dispatch():
    c = config_from_probabilities(3, 0.5, 0.8, 0.5, seed=1)
    for method in ("statevector", "two-qubit", "qica", "qica-literal", "mcmc"):
        events = sample(method, c, 10)
        assert len(events) == 10 and events.n_steps == 3
    with pytest.raises(KeyError):
        sample("nope", c, 10)
