"""Evaluation reports, Pareto comparisons, and Monte Carlo rollouts."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .mdp import ConfigurationError, Mdp, SolveConfig, require_valid
from .policies import PullPolicy, PushPolicy

PMF_TOL = 1e-9


@dataclass
class EvaluationReport:
    """Metrics of one joint policy on one MDP.

    Produced both by exact evaluation (episodes = steps = 0, PMFs from the
    stationary distribution) and by simulation (PMFs from counted update
    intervals, return_std_error across episodes). Peak age of information is
    the elapsed value k+1 at each update instant, i.e. the inter-update
    interval; per-state PMFs are keyed by the state observed when the interval
    began.
    """

    discounted_return: float
    per_step_avg_reward: float
    update_frequency: float
    discounted_comm_cost: float
    peak_aoi_pmf_overall: dict[int, float] = field(default_factory=dict)
    peak_aoi_pmf_per_state: dict[int, dict[int, float]] = field(default_factory=dict)
    episodes: int = 0
    steps: int = 0
    return_std_error: float = 0.0

    @property
    def net_objective(self) -> float:
        """Discounted reward minus discounted communication cost."""
        return self.discounted_return - self.discounted_comm_cost

    def check_pmfs(self) -> None:
        for name, pmf in [("overall", self.peak_aoi_pmf_overall)] + [
            (f"state {s}", p) for s, p in self.peak_aoi_pmf_per_state.items()
        ]:
            if pmf and abs(sum(pmf.values()) - 1.0) > PMF_TOL:
                raise ConfigurationError(f"peak-AoI PMF for {name} does not sum to 1")


class Dominance(enum.Enum):
    STRICTLY = "strictly"
    DOMINATES = "dominates"
    INCOMPARABLE = "incomparable"


def pareto_dominates(a: Sequence[float], b: Sequence[float]) -> Dominance:
    """Does metric tuple `a` weakly/strictly dominate `b` elementwise?

    Larger is better in every coordinate (pass costs negated). Equal tuples
    dominate but not strictly; INCOMPARABLE means `a` does not weakly
    dominate `b`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ConfigurationError("metric tuples must have equal length")
    if np.all(a >= b):
        return Dominance.STRICTLY if np.any(a > b) else Dominance.DOMINATES
    return Dominance.INCOMPARABLE


def scheme_dominates(
    xs: Sequence[Sequence[float]], ys: Sequence[Sequence[float]]
) -> bool:
    """Scheme-level dominance: every point of `ys` is weakly dominated by some point of `xs`."""
    return all(
        any(pareto_dominates(x, y) is not Dominance.INCOMPARABLE for x in xs)
        for y in ys
    )


def _start_distribution(m: Mdp, start: np.ndarray | None) -> np.ndarray:
    if start is None:
        return np.full(m.num_states, 1.0 / m.num_states)
    start = np.asarray(start, dtype=float)
    if start.shape != (m.num_states,) or np.any(start < 0) or abs(start.sum() - 1) > 1e-9:
        raise ConfigurationError("start must be a probability vector over states")
    return start / start.sum()


def simulate(
    m: Mdp,
    policy: PullPolicy | PushPolicy,
    cfg: SolveConfig,
    seed: int,
    episodes: int,
    steps: int,
    start: np.ndarray | None = None,
    initial_elapsed: int = 0,
) -> EvaluationReport:
    """Seeded rollouts of the closed loop formed by an MDP and a joint policy.

    Each episode starts just-updated at a state drawn from `start` (uniform by
    default); `initial_elapsed` shifts the first update of every episode, which
    is how phase-shifted periodic schedules are rolled out. Episode-truncated
    update intervals are dropped from the peak-AoI histograms.
    """
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError(
            f"policy built for t_max={policy.t_max}, config says {cfg.t_max}"
        )
    if not 0 <= initial_elapsed <= cfg.t_max:
        raise ConfigurationError("initial_elapsed must lie in [0, t_max]")
    dist = _start_distribution(m, start)
    n = m.num_states
    gamma = m.gamma
    rng_children = np.random.SeedSequence(seed).spawn(episodes)

    returns = np.zeros(episodes)
    costs = np.zeros(episodes)
    reward_sum = 0.0
    update_count = 0
    total_steps = 0
    overall_counts: dict[int, int] = {}
    per_state_counts: dict[int, dict[int, int]] = {}

    for ep in range(episodes):
        rng = np.random.default_rng(rng_children[ep])
        state = int(rng.choice(n, p=dist))
        anchor = state
        elapsed = initial_elapsed
        disc = 1.0
        for _ in range(steps):
            a = policy.action(anchor, elapsed)
            nxt = int(rng.choice(n, p=m.transitions[a, state]))
            r = m.rewards[a, state, nxt]
            returns[ep] += disc * r
            reward_sum += r
            elapsed += 1
            if policy.update_due(anchor, elapsed, nxt):
                costs[ep] += disc * gamma * cfg.beta
                update_count += 1
                overall_counts[elapsed] = overall_counts.get(elapsed, 0) + 1
                per_state_counts.setdefault(anchor, {})
                per_state_counts[anchor][elapsed] = (
                    per_state_counts[anchor].get(elapsed, 0) + 1
                )
                anchor = nxt
                elapsed = 0
            state = nxt
            disc *= gamma
            total_steps += 1

    def _normalize(counts: dict[int, int]) -> dict[int, float]:
        total = sum(counts.values())
        return {k: v / total for k, v in sorted(counts.items())}

    net = returns - costs
    report = EvaluationReport(
        discounted_return=float(returns.mean()),
        per_step_avg_reward=reward_sum / total_steps if total_steps else 0.0,
        update_frequency=update_count / total_steps if total_steps else 0.0,
        discounted_comm_cost=float(costs.mean()),
        peak_aoi_pmf_overall=_normalize(overall_counts) if overall_counts else {},
        peak_aoi_pmf_per_state={
            s: _normalize(c) for s, c in sorted(per_state_counts.items())
        },
        episodes=episodes,
        steps=total_steps,
        return_std_error=float(net.std(ddof=1) / np.sqrt(episodes))
        if episodes > 1
        else 0.0,
    )
    report.check_pmfs()
    return report
