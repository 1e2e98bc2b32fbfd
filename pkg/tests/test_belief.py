"""Belief propagation and blind-path returns against explicit path enumeration.

The enumeration oracle sums probability * discounted reward over every state
sequence, so it is exponential in the horizon but has no shared code with the
forward-sweep implementation it checks.
"""

import itertools

import numpy as np
import pytest
from conftest import random_mdp

from ccmdp import (
    ConfigurationError,
    anchor_beliefs,
    expected_path_return,
    propagate_belief,
    sequence_probability,
)


def enumerated_path_return(
    m, control, anchor, offset, length, terminal, beta, first_action=None
):
    """Sum over all state sequences of the prefix and the scored window."""
    n = m.num_states
    total = 0.0
    horizon = offset + length
    for path in itertools.product(range(n), repeat=horizon):
        seq = (anchor,) + path
        prob = 1.0
        ret = 0.0
        for j in range(horizon):
            if j == offset and first_action is not None:
                a = int(first_action)
            else:
                a = int(control[anchor, min(j, control.shape[1] - 1)])
            prob *= m.transitions[a, seq[j], seq[j + 1]]
            if prob == 0.0:
                break
            if j >= offset:
                ret += m.gamma ** (j - offset) * m.rewards[a, seq[j], seq[j + 1]]
        else:
            total += prob * (ret + m.gamma**length * (terminal[seq[-1]] - beta))
    return total


def random_control(seed, num_states, num_actions, columns):
    rng = np.random.default_rng(seed)
    return rng.integers(0, num_actions, size=(num_states, columns))


class TestPropagation:
    def test_single_step_is_the_transition_row(self):
        m = random_mdp(0)
        for a in range(m.num_actions):
            np.testing.assert_allclose(
                propagate_belief(m, 2, [a]), m.transitions[a, 2], atol=1e-15
            )

    def test_beliefs_stay_distributions(self):
        m = random_mdp(1)
        control = random_control(1, m.num_states, m.num_actions, 7)
        theta = anchor_beliefs(m, control, 6)
        np.testing.assert_allclose(theta.sum(axis=2), 1.0, atol=1e-12)
        assert np.all(theta >= 0)

    def test_anchor_beliefs_match_repeated_propagation(self):
        m = random_mdp(2)
        control = random_control(2, m.num_states, m.num_actions, 5)
        theta = anchor_beliefs(m, control, 4)
        for s in range(m.num_states):
            actions = [control[s, k] for k in range(3)]
            np.testing.assert_allclose(
                theta[s, 3], propagate_belief(m, s, actions), atol=1e-14
            )

    def test_out_of_range_start_rejected(self):
        with pytest.raises(ConfigurationError):
            propagate_belief(random_mdp(3), 9, [0])


class TestSequenceProbability:
    def test_sequences_of_fixed_length_sum_to_one(self):
        m = random_mdp(4)
        control = random_control(4, m.num_states, m.num_actions, 6)
        total = sum(
            sequence_probability(m, control, 1, 2, seq)
            for seq in itertools.product(range(m.num_states), repeat=3)
        )
        assert abs(total - 1.0) < 1e-12

    def test_single_sequence_is_the_product_of_steps(self):
        m = random_mdp(5)
        control = np.zeros((m.num_states, 4), dtype=int)
        p = sequence_probability(m, control, 0, 0, [0, 1, 2])
        assert abs(p - m.transitions[0, 0, 1] * m.transitions[0, 1, 2]) < 1e-15

    def test_empty_sequence_rejected(self):
        with pytest.raises(ConfigurationError):
            sequence_probability(random_mdp(6), np.zeros((4, 3), dtype=int), 0, 0, [])


class TestPathReturn:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_enumeration_on_random_instances(self, seed):
        m = random_mdp(seed, num_states=4)
        rng = np.random.default_rng(seed + 1000)
        control = random_control(seed, 4, m.num_actions, 7)
        terminal = rng.uniform(-1.0, 1.0, size=4)
        beta = float(rng.uniform(0.0, 1.0))
        anchor = int(rng.integers(0, 4))
        offset = int(rng.integers(0, 3))
        length = int(rng.integers(1, 5))
        got = expected_path_return(m, control, anchor, offset, length, terminal, beta)
        want = enumerated_path_return(m, control, anchor, offset, length, terminal, beta)
        assert abs(got - want) < 1e-10

    def test_first_action_override_matches_enumeration(self):
        m = random_mdp(30, num_states=4)
        control = random_control(30, 4, m.num_actions, 6)
        terminal = np.linspace(-1, 1, 4)
        for a in range(m.num_actions):
            got = expected_path_return(
                m, control, 2, 1, 3, terminal, 0.3, first_action=a
            )
            want = enumerated_path_return(
                m, control, 2, 1, 3, terminal, 0.3, first_action=a
            )
            assert abs(got - want) < 1e-10

    def test_linear_in_terminal_value(self):
        m = random_mdp(31)
        control = random_control(31, m.num_states, m.num_actions, 5)
        t1 = np.arange(4.0)
        t2 = np.ones(4)

        def f(t):
            return expected_path_return(m, control, 0, 0, 3, t, 0.0)

        assert abs(f(t1 + t2) + f(np.zeros(4)) - f(t1) - f(t2)) < 1e-12

    def test_update_charge_scales_with_discounted_probability_one(self):
        m = random_mdp(32)
        control = random_control(32, m.num_states, m.num_actions, 5)
        terminal = np.zeros(4)
        length = 3
        base = expected_path_return(m, control, 1, 0, length, terminal, 0.0)
        charged = expected_path_return(m, control, 1, 0, length, terminal, 0.7)
        assert abs((base - charged) - m.gamma**length * 0.7) < 1e-12

    def test_zero_length_rejected(self):
        with pytest.raises(ConfigurationError):
            expected_path_return(
                random_mdp(33), np.zeros((4, 3), dtype=int), 0, 0, 0, np.zeros(4), 0.0
            )
