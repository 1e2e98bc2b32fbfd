"""Report container, dominance helpers, and the seeded simulator."""

import numpy as np
import pytest
from conftest import random_mdp

from ccmdp import (
    ConfigurationError,
    Dominance,
    EvaluationReport,
    Mdp,
    PullPolicy,
    SolveConfig,
    pareto_dominates,
    scheme_dominates,
    simulate,
)


class TestDominance:
    def test_strict_weak_and_incomparable(self):
        assert pareto_dominates([2.0, 3.0], [1.0, 3.0]) is Dominance.STRICTLY
        assert pareto_dominates([1.0, 3.0], [1.0, 3.0]) is Dominance.DOMINATES
        assert pareto_dominates([2.0, 1.0], [1.0, 3.0]) is Dominance.INCOMPARABLE

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            pareto_dominates([1.0], [1.0, 2.0])

    def test_scheme_dominance(self):
        xs = [[2.0, 2.0], [0.0, 5.0]]
        assert scheme_dominates(xs, [[1.0, 1.0], [0.0, 4.0]])
        assert not scheme_dominates(xs, [[3.0, 3.0]])


class TestReport:
    def test_net_objective_subtracts_cost(self):
        r = EvaluationReport(
            discounted_return=5.0,
            per_step_avg_reward=0.2,
            update_frequency=0.5,
            discounted_comm_cost=1.5,
        )
        assert r.net_objective == pytest.approx(3.5)

    def test_pmf_check_rejects_unnormalized(self):
        r = EvaluationReport(
            discounted_return=0.0,
            per_step_avg_reward=0.0,
            update_frequency=0.0,
            discounted_comm_cost=0.0,
            peak_aoi_pmf_overall={1: 0.5, 2: 0.4},
        )
        with pytest.raises(ConfigurationError):
            r.check_pmfs()


def _period_policy(num_states, t_max, period):
    return PullPolicy(
        control=np.zeros((num_states, t_max + 1), dtype=int),
        periods=np.full(num_states, period, dtype=int),
    )


class TestSimulate:
    def test_same_seed_reproduces_everything(self):
        m = random_mdp(0)
        cfg = SolveConfig(beta=0.3, t_max=6, horizon_cap=6)
        policy = _period_policy(4, 6, 2)
        a = simulate(m, policy, cfg, seed=42, episodes=5, steps=60)
        b = simulate(m, policy, cfg, seed=42, episodes=5, steps=60)
        assert a == b

    def test_different_seed_changes_trajectories(self):
        m = random_mdp(1)
        cfg = SolveConfig(beta=0.0, t_max=6, horizon_cap=6)
        policy = _period_policy(4, 6, 3)
        a = simulate(m, policy, cfg, seed=1, episodes=3, steps=50)
        b = simulate(m, policy, cfg, seed=2, episodes=3, steps=50)
        assert a.discounted_return != b.discounted_return

    def test_single_state_constant_reward(self):
        m = Mdp(transitions=np.ones((1, 1, 1)), rewards=np.full((1, 1, 1), 0.5), gamma=0.9)
        cfg = SolveConfig(beta=0.2, t_max=4, horizon_cap=4)
        report = simulate(m, _period_policy(1, 4, 1), cfg, seed=0, episodes=2, steps=100)
        assert report.per_step_avg_reward == pytest.approx(0.5)
        assert report.update_frequency == pytest.approx(1.0)
        assert report.peak_aoi_pmf_overall == {1: pytest.approx(1.0)}
        # every step pays beta discounted to its arrival: gamma*beta/(1-gamma)
        assert report.discounted_comm_cost == pytest.approx(
            m.gamma * cfg.beta / (1 - m.gamma), rel=1e-3
        )

    def test_periodic_policy_yields_single_atom_pmfs(self):
        m = random_mdp(2)
        cfg = SolveConfig(beta=0.0, t_max=8, horizon_cap=8)
        report = simulate(m, _period_policy(4, 8, 3), cfg, seed=3, episodes=1, steps=500)
        report.check_pmfs()
        assert set(report.peak_aoi_pmf_overall) == {3}
        for pmf in report.peak_aoi_pmf_per_state.values():
            assert set(pmf) == {3}

    def test_bad_start_distribution_rejected(self):
        m = random_mdp(3)
        cfg = SolveConfig(t_max=4)
        with pytest.raises(ConfigurationError):
            simulate(
                m,
                _period_policy(4, 4, 1),
                cfg,
                seed=0,
                episodes=1,
                steps=10,
                start=np.array([0.5, 0.5, 0.5, 0.5]),
            )
