"""Exact evaluation of joint policies on the augmented closed-loop chain.

The closed loop formed by an MDP, a control map, and a communication rule is a
finite Markov chain over triples (last observed state s, elapsed steps k,
current state s'). One step from (s, k, s'): the controller applies
control(s, k), the chain moves to s'', the elapsed counter reaches k + 1 and
the communication rule decides whether an update is delivered (forced once
k + 1 reaches t_max). An update resets the triple to (s'', 0, s'') and costs
beta, discounted to the instant of delivery.

Discounted returns and costs come from sparse linear solves, so they are exact
up to machine precision; long-run rates come from the stationary distribution
of the chain restricted to the states reachable from the start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .evaluation import EvaluationReport, _start_distribution
from .mdp import ConfigurationError, IterationLimitError, Mdp, SolveConfig, require_valid
from .policies import PullPolicy, PushPolicy

STATIONARY_TOL = 1e-12
STATIONARY_RESTART = 1e-9


def stationary_distribution(
    chain: sp.spmatrix | np.ndarray,
    tol: float = STATIONARY_TOL,
    restart: float = STATIONARY_RESTART,
    max_iterations: int = 1_000_000,
    method: str = "direct",
) -> np.ndarray:
    """Stationary row vector of a row-stochastic chain.

    Both methods target the same object: the unique fixed point of the chain
    mixed with a uniform restart of weight `restart`, which exists even for
    periodic or reducible chains. The restart bias on reported rates is of
    order `restart`, far below reporting tolerances.

    "direct" solves the fixed-point equations with a sparse LU, exact up to
    machine precision. "power" runs lazy damped power iteration to `tol`;
    it is kept for cross-checking but mixes slowly on chains with long
    silent stretches.
    """
    n = chain.shape[0]
    if chain.shape != (n, n):
        raise ConfigurationError("chain must be square")
    uniform = np.full(n, 1.0 / n)
    if method == "direct":
        matrix = sp.csr_matrix(chain)
        # pi = pi [(1-e)P + e U]  <=>  (I - (1-e)P^T) pi^T = e/n 1
        system = (sp.identity(n, format="csr") - (1.0 - restart) * matrix.T).tocsc()
        pi = splu(system).solve(np.full(n, restart / n))
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()
    if method != "power":
        raise ConfigurationError(f"unknown method {method!r}")
    pi = uniform.copy()
    for _ in range(max_iterations):
        stepped = np.asarray(pi @ chain).ravel()
        new = 0.5 * pi + 0.5 * ((1.0 - restart) * stepped + restart * uniform)
        new /= new.sum()
        if np.abs(new - pi).sum() < tol:
            return new
        pi = new
    raise IterationLimitError("stationary distribution did not converge")


@dataclass
class AugmentedChain:
    """Sparse closed-loop chain plus per-state step statistics.

    matrix[x, y]: one-step transition probability between flat triple indices;
    reward[x]: expected step reward from x; cost[x]: expected communication
    cost attributed to the step (beta discounted one step, since the update
    lands at the next instant); update_prob[x]: probability the step ends in
    an update; peak[x] = k + 1, the age an update delivered from x records.
    """

    matrix: sp.csr_matrix
    reward: np.ndarray
    cost: np.ndarray
    update_prob: np.ndarray
    num_states: int
    t_max: int

    def index(self, s: int, k: int, current: int) -> int:
        return (s * (self.t_max + 1) + k) * self.num_states + current

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def start_vector(self, dist: np.ndarray) -> np.ndarray:
        v = np.zeros(self.size)
        for s, p in enumerate(dist):
            if p > 0:
                v[self.index(s, 0, s)] = p
        return v


def augmented_chain(
    m: Mdp, policy: PullPolicy | PushPolicy, cfg: SolveConfig
) -> AugmentedChain:
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError(
            f"policy built for t_max={policy.t_max}, config says {cfg.t_max}"
        )
    if policy.num_states != m.num_states:
        raise ConfigurationError("policy and MDP disagree on the number of states")
    n, kk = m.num_states, cfg.t_max + 1
    size = n * kk * n
    er = m.expected_rewards()
    gamma_beta = m.gamma * cfg.beta

    rows, cols, data = [], [], []
    reward = np.zeros(size)
    cost = np.zeros(size)
    update_prob = np.zeros(size)
    arange_n = np.arange(n)
    reset_cols = arange_n * kk * n + arange_n  # index(s'', 0, s'')

    for s in range(n):
        for k in range(kk):
            a = policy.action(s, k)
            p_a = m.transitions[a]
            u = np.array(
                [policy.update_due(s, k + 1, s2) for s2 in range(n)], dtype=bool
            )
            silent_cols = (s * kk + min(k + 1, cfg.t_max)) * n + arange_n
            col_row = np.where(u, reset_cols, silent_cols)
            base = (s * kk + k) * n
            block = p_a  # rows: s', cols: s''
            nz_r, nz_c = np.nonzero(block)
            rows.append(base + nz_r)
            cols.append(col_row[nz_c])
            data.append(block[nz_r, nz_c])
            idx = slice(base, base + n)
            reward[idx] = er[a]
            upd = p_a @ u.astype(float)
            update_prob[idx] = upd
            cost[idx] = gamma_beta * upd

    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
    return AugmentedChain(
        matrix=matrix,
        reward=reward,
        cost=cost,
        update_prob=update_prob,
        num_states=n,
        t_max=cfg.t_max,
    )


def chain_values(
    chain: AugmentedChain, gamma: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(net, reward-only, cost-only) discounted values for every triple."""
    system = (sp.identity(chain.size, format="csr") - gamma * chain.matrix).tocsc()
    lu = splu(system)
    v_reward = lu.solve(chain.reward)
    v_cost = lu.solve(chain.cost)
    return v_reward - v_cost, v_reward, v_cost


def reachable_indices(chain: AugmentedChain, seeds: np.ndarray) -> np.ndarray:
    """Indices reachable from any seed index, via DFS on the sparse structure."""
    indptr, indices = chain.matrix.indptr, chain.matrix.indices
    seen = np.zeros(chain.size, dtype=bool)
    stack = list(np.atleast_1d(seeds))
    for x in stack:
        seen[x] = True
    while stack:
        x = stack.pop()
        for y in indices[indptr[x] : indptr[x + 1]]:
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    return np.nonzero(seen)[0]


def _restricted_stationary(
    chain: AugmentedChain, start: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    seeds = np.nonzero(start)[0]
    reach = reachable_indices(chain, seeds)
    sub = chain.matrix[reach][:, reach]
    pi_sub = stationary_distribution(sub)
    return pi_sub, reach


def evaluate_joint_policy_exact(
    m: Mdp,
    policy: PullPolicy | PushPolicy,
    cfg: SolveConfig,
    start: np.ndarray | None = None,
) -> EvaluationReport:
    """Exact metrics of a joint policy from a just-updated start distribution.

    Discounted quantities are measured at episode start with the revealing
    update's cost sunk; rates and peak-AoI PMFs are long-run stationary
    quantities on the part of the chain the start can reach.
    """
    dist = _start_distribution(m, start)
    chain = augmented_chain(m, policy, cfg)
    _, v_reward, v_cost = chain_values(chain, m.gamma)
    start_vec = chain.start_vector(dist)

    pi_sub, reach = _restricted_stationary(chain, start_vec)
    upd_rate = float(pi_sub @ chain.update_prob[reach])
    avg_reward = float(pi_sub @ chain.reward[reach])

    kk = chain.t_max + 1
    n = chain.num_states
    anchor_of = reach // (kk * n)
    peak_of = (reach // n) % kk + 1
    event_mass = pi_sub * chain.update_prob[reach]
    per_state: dict[int, dict[int, float]] = {}
    for mass, anchor, peak in zip(event_mass, anchor_of, peak_of):
        if mass > 0:
            per_state.setdefault(int(anchor), {})
            per_state[int(anchor)][int(peak)] = (
                per_state[int(anchor)].get(int(peak), 0.0) + mass
            )
    overall_raw: dict[int, float] = {}
    for pmf in per_state.values():
        for peak, mass in pmf.items():
            overall_raw[peak] = overall_raw.get(peak, 0.0) + mass

    def _normalize(d: dict[int, float]) -> dict[int, float]:
        total = sum(d.values())
        return {k: v / total for k, v in sorted(d.items())} if total > 0 else {}

    report = EvaluationReport(
        discounted_return=float(start_vec @ v_reward),
        per_step_avg_reward=avg_reward,
        update_frequency=upd_rate,
        discounted_comm_cost=float(start_vec @ v_cost),
        peak_aoi_pmf_overall=_normalize(overall_raw),
        peak_aoi_pmf_per_state={
            s: _normalize(p) for s, p in sorted(per_state.items()) if sum(p.values()) > 0
        },
        episodes=0,
        steps=0,
    )
    report.check_pmfs()
    return report


def canonical_objective(
    m: Mdp, policy: PullPolicy | PushPolicy, cfg: SolveConfig
) -> float:
    """Net objective (reward minus communication cost) from the uniform
    just-updated start; the scalar every cross-method comparison uses."""
    chain = augmented_chain(m, policy, cfg)
    v_net, _, _ = chain_values(chain, m.gamma)
    start_vec = chain.start_vector(np.full(m.num_states, 1.0 / m.num_states))
    return float(start_vec @ v_net)


def entry_value(
    m: Mdp,
    policy: PullPolicy | PushPolicy,
    cfg: SolveConfig,
    entry_state: int,
    start: np.ndarray | None = None,
) -> float:
    """Arrival-time-convention value measured at entry into `entry_state`.

    The entering transition's reward (and update cost, if the entering step
    delivers one) counts undiscounted at the entry instant; later rewards are
    discounted by their own arrival instants. Occurrences are averaged as a
    renewal value: only entry types the policy keeps returning to (positive
    stationary mass) participate, weighted by their discounted flow from
    `start`, which defaults to `entry_state` itself just updated. One-off
    occurrences on the burn-in path from the start are excluded, and cap
    artifacts such as the forced refresh at the elapsed-time bound are
    discounted away. If no entry type recurs, the burn-in occurrences
    themselves are averaged by discounted flow.
    """
    if start is None:
        dist = np.zeros(m.num_states)
        dist[entry_state] = 1.0
    else:
        dist = _start_distribution(m, start)
    chain = augmented_chain(m, policy, cfg)
    _, v_reward, v_cost = chain_values(chain, m.gamma)
    start_vec = chain.start_vector(dist)
    reach = reachable_indices(chain, np.nonzero(start_vec)[0])

    n, kk = chain.num_states, chain.t_max + 1
    sources: list[int] = []
    probs: list[float] = []
    values: list[float] = []
    for pos, x in enumerate(reach):
        s, rem = divmod(int(x), kk * n)
        k, s_prev = divmod(rem, n)
        a = policy.action(s, k)
        p = m.transitions[a, s_prev, entry_state]
        if p <= 0:
            continue
        u = policy.update_due(s, k + 1, entry_state)
        if u:
            after = chain.index(entry_state, 0, entry_state)
        else:
            after = chain.index(s, min(k + 1, chain.t_max), entry_state)
        values.append(
            m.rewards[a, s_prev, entry_state]
            - cfg.beta * u
            + m.gamma * v_reward[after]
            - v_cost[after]
        )
        sources.append(pos)
        probs.append(p)
    if not values:
        raise ConfigurationError(
            f"state {entry_state} is never entered under this policy"
        )
    vals = np.array(values)
    if vals.max() - vals.min() < 1e-9:
        # all entry occurrences agree, no need to weight them
        return float(vals.mean())
    sub = chain.matrix[reach][:, reach]
    system = (sp.identity(len(reach), format="csr") - m.gamma * sub.T).tocsc()
    occupancy = splu(system).solve(start_vec[reach])
    flows = occupancy[sources] * np.array(probs)
    # burn-in sources carry only the damped-restart floor of stationary mass,
    # several orders below any recurrent state, so a relative cut splits them
    pi_sub = stationary_distribution(sub)
    recurrent = pi_sub[sources] > 1e-6 * pi_sub.max()
    if np.any(recurrent):
        flows = np.where(recurrent, flows, 0.0)
    if flows.sum() <= 0:
        raise ConfigurationError(
            f"state {entry_state} has no discounted entry flow under this policy"
        )
    return float(flows @ vals / flows.sum())
