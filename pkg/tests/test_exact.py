"""Exact closed-loop evaluation: stationary solves, value identities, and
agreement between the augmented chain, hand recursions, and simulation."""

import numpy as np
import pytest
from conftest import random_mdp

from ccmdp import (
    ConfigurationError,
    Mdp,
    PullPolicy,
    SolveConfig,
    always_init_equilibrium,
    augmented_chain,
    canonical_objective,
    closed_form_aoi,
    closed_form_never,
    closed_form_push,
    entry_value,
    evaluate_joint_policy_exact,
    never_init_equilibrium,
    reachable_indices,
    simulate,
    solve_aoi_periodic,
    solve_full_observability,
    stationary_distribution,
)
from ccmdp.policies import PushPolicy


class TestStationary:
    def test_permutation_chain_is_uniform(self, ce):
        # one-hot rows make the long action a permutation matrix
        pi = stationary_distribution(ce.mdp.transitions[0])
        np.testing.assert_allclose(pi, np.full(5, 0.2), atol=1e-9)

    def test_two_state_swap(self):
        chain = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(
            stationary_distribution(chain), [0.5, 0.5], atol=1e-9
        )

    def test_identity_chain_restart_gives_uniform(self):
        pi = stationary_distribution(np.eye(4))
        np.testing.assert_allclose(pi, np.full(4, 0.25), atol=1e-9)

    def test_direct_and_power_methods_agree(self):
        rng = np.random.default_rng(0)
        chain = rng.dirichlet(np.ones(6), size=6)
        a = stationary_distribution(chain, method="direct")
        b = stationary_distribution(chain, method="power")
        np.testing.assert_allclose(a, b, atol=1e-8)
        np.testing.assert_allclose(a, a @ chain, atol=1e-8)

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigurationError):
            stationary_distribution(np.eye(2), method="qr")


def _random_pull_policy(seed, num_states, num_actions, t_max):
    rng = np.random.default_rng(seed)
    return PullPolicy(
        control=rng.integers(0, num_actions, size=(num_states, t_max + 1)),
        periods=rng.integers(1, t_max + 1, size=num_states),
    )


class TestAugmentedChain:
    def test_rows_are_stochastic_and_costs_scale_with_updates(self):
        m = random_mdp(5)
        cfg = SolveConfig(beta=0.7, t_max=5, horizon_cap=5)
        policy = _random_pull_policy(5, 4, m.num_actions, 5)
        chain = augmented_chain(m, policy, cfg)
        np.testing.assert_allclose(
            np.asarray(chain.matrix.sum(axis=1)).ravel(), 1.0, atol=1e-12
        )
        assert np.all(chain.update_prob >= 0) and np.all(chain.update_prob <= 1 + 1e-15)
        np.testing.assert_allclose(
            chain.cost, m.gamma * cfg.beta * chain.update_prob, atol=1e-15
        )

    def test_policy_config_mismatch_rejected(self):
        m = random_mdp(6)
        policy = _random_pull_policy(6, 4, m.num_actions, 5)
        with pytest.raises(ConfigurationError):
            augmented_chain(m, policy, SolveConfig(t_max=7, horizon_cap=7))

    def test_reachability_from_one_anchor(self, ce):
        cfg = SolveConfig(beta=0.0, t_max=3, horizon_cap=3)
        policy = _random_pull_policy(7, 5, 2, 3)
        chain = augmented_chain(ce.mdp, policy, cfg)
        seed = np.array([chain.index(0, 0, 0)])
        reach = reachable_indices(chain, seed)
        assert chain.index(0, 0, 0) in reach
        assert len(reach) <= chain.size


class TestHandRecursions:
    """Arrival-time-convention values of the three hand-analyzed schemes."""

    T = 250

    def test_silent_scheme_value(self, ce):
        cfg = SolveConfig(beta=0.8, t_max=self.T, horizon_cap=self.T)
        got = entry_value(ce.mdp, never_init_equilibrium(self.T), cfg, 0)
        assert got == pytest.approx(closed_form_never(0.9), abs=1e-9)

    def test_informed_scheme_value(self, ce):
        cfg = SolveConfig(beta=0.6, t_max=self.T, horizon_cap=self.T)
        got = entry_value(ce.mdp, always_init_equilibrium(self.T), cfg, 0)
        assert got == pytest.approx(closed_form_push(0.9, 0.6), abs=1e-7)

    def test_periodic_schedule_value(self, ce):
        cfg = SolveConfig(beta=0.4, t_max=self.T, horizon_cap=self.T)
        res = solve_aoi_periodic(ce.mdp, cfg, period=2)
        got = entry_value(ce.mdp, res.policy, cfg, 0)
        assert got == pytest.approx(closed_form_aoi(0.9, 0.4), abs=1e-7)

    def test_closed_forms_at_free_communication(self, ce):
        # with free updates the informed scheme equals the period-2 schedule
        assert closed_form_push(0.9, 0.0) == pytest.approx(closed_form_aoi(0.9, 0.0))
        values, _ = solve_full_observability(ce.mdp)
        # entering state 0 is worth 1 + gamma * V(0) under full information
        assert closed_form_push(0.9, 0.0) == pytest.approx(
            1 + 0.9 * values[0], abs=1e-10
        )


class TestExactEvaluation:
    def test_always_transmit_matches_full_observability(self, ce):
        cfg = SolveConfig(beta=0.0, t_max=8, horizon_cap=8)
        values, policy = solve_full_observability(ce.mdp, cfg)
        push = PushPolicy(
            control=np.tile(policy[:, None], (1, 9)),
            transmit=np.ones((5, 9, 5), dtype=np.uint8),
        )
        assert canonical_objective(ce.mdp, push, cfg) == pytest.approx(
            float(np.mean(values)), abs=1e-10
        )
        report = evaluate_joint_policy_exact(ce.mdp, push, cfg)
        assert report.update_frequency == pytest.approx(1.0, abs=1e-9)
        assert set(report.peak_aoi_pmf_overall) == {1}

    def test_periodic_policy_pmf_atoms(self):
        m = random_mdp(8)
        cfg = SolveConfig(beta=0.2, t_max=6, horizon_cap=6)
        policy = PullPolicy(
            control=np.zeros((4, 7), dtype=int), periods=np.full(4, 3, dtype=int)
        )
        report = evaluate_joint_policy_exact(m, policy, cfg)
        assert set(report.peak_aoi_pmf_overall) == {3}
        for pmf in report.peak_aoi_pmf_per_state.values():
            assert set(pmf) == {3}
        assert report.update_frequency == pytest.approx(1 / 3, abs=1e-9)

    def test_simulation_agrees_with_exact_chain(self, ce):
        cfg = SolveConfig(beta=0.3, t_max=12, horizon_cap=12)
        res = solve_aoi_periodic(ce.mdp, cfg, period=2)
        exact = evaluate_joint_policy_exact(ce.mdp, res.policy, cfg)
        sim = simulate(ce.mdp, res.policy, cfg, seed=9, episodes=1, steps=50_000)
        assert sim.update_frequency == pytest.approx(exact.update_frequency, abs=0.01)
        assert sim.per_step_avg_reward == pytest.approx(
            exact.per_step_avg_reward, abs=0.01
        )
        assert sim.peak_aoi_pmf_overall == {2: pytest.approx(1.0)}

    def test_discounted_return_within_episode_noise(self, ce):
        cfg = SolveConfig(beta=0.3, t_max=12, horizon_cap=12)
        res = solve_aoi_periodic(ce.mdp, cfg, period=2)
        exact = evaluate_joint_policy_exact(ce.mdp, res.policy, cfg)
        sim = simulate(ce.mdp, res.policy, cfg, seed=10, episodes=400, steps=250)
        margin = 5 * sim.return_std_error + 1e-6
        assert abs(sim.discounted_return - exact.discounted_return) < margin

    def test_entry_into_unreachable_state_rejected(self):
        t = np.zeros((1, 2, 2))
        t[0, :, 0] = 1.0
        m = Mdp(transitions=t, rewards=np.zeros_like(t), gamma=0.9)
        policy = PullPolicy(
            control=np.zeros((2, 4), dtype=int), periods=np.ones(2, dtype=int)
        )
        with pytest.raises(ConfigurationError):
            entry_value(m, policy, SolveConfig(t_max=3, horizon_cap=3), 1)
