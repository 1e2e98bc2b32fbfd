"""Solver for pull-mode communication: the controller requests updates.

A pull policy is a per-state update period plus a control map over (last
observed state s, elapsed k). Between requests the controller acts on the
propagated open-loop belief; when the elapsed counter reaches the period (or
the hard cap t_max) the next transition ends with a state update that costs
beta at the instant it lands.

The value table V(s, k) is the expected discounted net return given the last
update revealed s and k silent steps have passed. It satisfies

    V(s, k) = sum_s' theta_sk(s') sum_s'' P_a(s', s'')
              [ r(a, s', s'') + gamma (d (V(s'', 0) - beta) + (1 - d) V(s, k+1)) ]

with a = control(s, k), theta the open-loop belief, and d = 1 exactly when
k + 1 reaches min(period(s), t_max). Entries at k past the update point are
unreachable in closed loop; they are kept well defined by the same formula
(there d = 1, a single step into a reset).

Control improvement scores a candidate action at (s, k) on the true deviation
path: act once, then follow the incumbent row to the update point, terminal
value V(., 0) - beta. This is exact for a single deviation because beliefs
depend on the whole action prefix, not just (s, k). Rows whose window is
short enough to list every action sequence are then replaced outright by the
best sequence against the reset values, because a row that only pays off
after a coordinated change of several entries is a local minimum for the
one-deviation update. Period improvement scores every candidate period by
the same path objective from a fresh update. All improvements in a round are
computed against the round's opening value table, control first, then
periods against the new control.

Alternating improvements this way is not guaranteed monotone: changing an
action reshapes the beliefs later actions were scored under, and simultaneous
per-state changes interact through the shared reset values. A round whose
joint update fails to improve the exact net objective therefore falls back to
adopting the update for one state at a time, keeping the best improving
single-state change; only when no single change helps either does the solve
stop, with the best policy seen. The landing point still depends on the
start, so the default mode runs the alternation twice, once from the zero
start and once warm-started from the best uniform-period schedule, and keeps
the better result. The warm start also pins the solver's result to at least
the scheduled baseline's value by construction.
"""

from __future__ import annotations

import dataclasses
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .belief import anchor_beliefs
from .exact import canonical_objective
from .mdp import (
    ConfigurationError,
    IterationLimitError,
    Mdp,
    SolveConfig,
    require_valid,
)
from .policies import PullPolicy

logger = logging.getLogger(__name__)


def _sweep_tensors(m: Mdp, policy: PullPolicy):
    """Precomputed pieces of the value recursion for a fixed policy.

    base[s, k]: expected immediate reward under the belief at (s, k);
    pushed[s, k, :]: belief pushed one step forward (weights on the reset
    state); due[s, k]: True when the step out of (s, k) ends in an update.
    """
    control = policy.control
    t_max = policy.t_max
    theta = anchor_beliefs(m, control, t_max)
    er = m.expected_rewards()
    base = np.sum(theta * er[control], axis=2)
    trans_sel = m.transitions[control]
    pushed = np.einsum("skx,skxt->skt", theta, trans_sel)
    k_next = np.arange(t_max + 1)[None, :] + 1
    due = k_next >= np.minimum(policy.periods, t_max)[:, None]
    return base, pushed, due


def _apply_sweep(base, pushed, due, gamma, beta, values):
    reset = pushed @ (values[:, 0] - beta)
    cont = np.empty_like(values)
    cont[:, :-1] = values[:, 1:]
    cont[:, -1] = 0.0  # never read: the last column always resets
    return base + gamma * np.where(due, reset, cont)


def value_update_sweep(
    m: Mdp, policy: PullPolicy, values: np.ndarray, cfg: SolveConfig
) -> np.ndarray:
    """One synchronous application of the value recursion to a (S, t_max+1)
    table. The converged table is its fixed point."""
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError("policy and config disagree on t_max")
    if values.shape != (m.num_states, cfg.t_max + 1):
        raise ConfigurationError(
            f"values must have shape {(m.num_states, cfg.t_max + 1)}"
        )
    base, pushed, due = _sweep_tensors(m, policy)
    return _apply_sweep(base, pushed, due, m.gamma, cfg.beta, values)


def evaluate_pull(
    m: Mdp, policy: PullPolicy, cfg: SolveConfig, values: np.ndarray | None = None
) -> np.ndarray:
    """Value table of a pull policy by iterating the recursion to cfg.tolerance.

    The recursion contracts at rate gamma, so the sup-norm error of the result
    is at most tolerance * gamma / (1 - gamma).
    """
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError("policy and config disagree on t_max")
    base, pushed, due = _sweep_tensors(m, policy)
    v = (
        np.zeros((m.num_states, cfg.t_max + 1))
        if values is None
        else np.array(values, dtype=float)
    )
    for _ in range(cfg.max_iterations):
        new = _apply_sweep(base, pushed, due, m.gamma, cfg.beta, v)
        if np.max(np.abs(new - v)) < cfg.tolerance:
            return new
        v = new
    raise IterationLimitError("pull value iteration did not converge")


def improve_control(
    m: Mdp, policy: PullPolicy, values: np.ndarray, cfg: SolveConfig
) -> PullPolicy:
    """Greedy one-deviation control update against the incumbent policy.

    For each (s, k) and action a: take a now under the belief at (s, k), then
    follow the incumbent row until the update point, where the terminal value
    is V(., 0) - beta. Entries at k past the update point get the same
    objective with the update due after one step, which keeps them sensible
    for period probes. Ties go to the lowest action index.
    """
    control = policy.control
    t_max = policy.t_max
    theta = anchor_beliefs(m, control, t_max)
    er = m.expected_rewards()
    target = values[:, 0] - cfg.beta
    gamma = m.gamma
    n, kk = m.num_states, t_max + 1
    new_control = np.empty_like(control)
    for s in range(n):
        n_eff = min(int(policy.periods[s]), t_max)
        # w[j, s'] = value to go at elapsed j given the true state is s',
        # following the incumbent row; rows at or past the update point are
        # the reset terminal.
        w = np.tile(target, (kk + 1, 1))
        for j in range(n_eff - 1, -1, -1):
            a = control[s, j]
            w[j] = er[a] + gamma * (m.transitions[a] @ w[j + 1])
        q = np.empty((m.num_actions, kk))
        for a in range(m.num_actions):
            lookahead = er[a][None, :] + gamma * (w[1:] @ m.transitions[a].T)
            q[a] = np.einsum("ks,ks->k", theta[s], lookahead)
        new_control[s] = np.argmax(q, axis=0)
    return PullPolicy(control=new_control, periods=policy.periods.copy())


def improve_periods(
    m: Mdp, policy: PullPolicy, values: np.ndarray, cfg: SolveConfig
) -> PullPolicy:
    """Best update period per state against the incumbent control and values.

    Scores period n as the path objective from a fresh update: n silent steps
    under the incumbent row, then a reset worth V(., 0) - beta. The search
    runs over [1, min(horizon_cap, t_max)]: past t_max the forced update makes
    longer periods indistinguishable. Ties go to the shortest period. A period
    chosen at the cap means the no-communication regime; that is warned about
    once per call.
    """
    control = policy.control
    t_max = policy.t_max
    n_cap = min(cfg.horizon_cap, t_max)
    er = m.expected_rewards()
    target = values[:, 0] - cfg.beta
    gamma = m.gamma
    new_periods = np.empty_like(policy.periods)
    capped: list[int] = []
    for s in range(m.num_states):
        b = np.zeros(m.num_states)
        b[s] = 1.0
        scores = np.empty(n_cap)
        prefix = 0.0
        disc = 1.0
        for n in range(1, n_cap + 1):
            a = control[s, n - 1]
            prefix += disc * float(b @ er[a])
            b = b @ m.transitions[a]
            disc *= gamma
            scores[n - 1] = prefix + disc * float(b @ target)
        best = int(np.argmax(scores)) + 1
        new_periods[s] = best
        if best == n_cap:
            capped.append(s)
    if capped:
        warnings.warn(
            f"states {capped} chose the maximum period {n_cap}; "
            "they are effectively not communicating",
            stacklevel=2,
        )
    return PullPolicy(control=control.copy(), periods=new_periods)


_EXACT_WINDOW_SEQUENCES = 256


def _exact_window_rows(
    m: Mdp, policy: PullPolicy, values: np.ndarray, cfg: SolveConfig
) -> PullPolicy:
    """Outright best action sequence for every window small enough to list.

    Enumerates the action sequences of a window by depth-first search over
    belief prefixes and keeps the one with the best path objective against
    the incumbent reset values, which is exact for the current period. Only
    windows with at most _EXACT_WINDOW_SEQUENCES sequences are searched;
    longer ones keep the one-deviation result. Entries past the update point
    are left alone.
    """
    er = m.expected_rewards()
    target = values[:, 0] - cfg.beta
    gamma = m.gamma
    control = policy.control.copy()
    for s in range(m.num_states):
        n_eff = min(int(policy.periods[s]), policy.t_max)
        if int(m.num_actions) ** n_eff > _EXACT_WINDOW_SEQUENCES:
            continue
        start = np.zeros(m.num_states)
        start[s] = 1.0
        best_val, best_seq = -np.inf, None
        stack: list[tuple[int, np.ndarray, float, tuple[int, ...]]] = [
            (0, start, 0.0, ())
        ]
        while stack:
            j, b, ret, seq = stack.pop()
            if j == n_eff:
                val = ret + gamma**n_eff * float(b @ target)
                if val > best_val:
                    best_val, best_seq = val, seq
                continue
            disc = gamma**j
            for a in range(m.num_actions):
                stack.append(
                    (
                        j + 1,
                        b @ m.transitions[a],
                        ret + disc * float(b @ er[a]),
                        seq + (a,),
                    )
                )
        control[s, :n_eff] = best_seq
    return PullPolicy(control=control, periods=policy.periods.copy())


@dataclass
class PullSolveResult:
    policy: PullPolicy
    values: np.ndarray
    objective: float
    rounds: int
    converged: bool
    log: list[str] = field(default_factory=list)


def _single_state_escape(
    m: Mdp,
    cfg: SolveConfig,
    policy: PullPolicy,
    candidate: PullPolicy,
    current_obj: float,
) -> tuple[PullPolicy | None, float]:
    """Best single-state adoption of the candidate's (control row, period).

    A stalled joint update usually stalls because its per-state changes fight
    each other through the shared reset values; one state's change in
    isolation is often still an improvement. Returns (None, current_obj) when
    no single change beats the incumbent by cfg.tolerance.
    """
    best_policy, best_obj = None, current_obj
    for s in range(m.num_states):
        if (
            np.array_equal(candidate.control[s], policy.control[s])
            and candidate.periods[s] == policy.periods[s]
        ):
            continue
        control = policy.control.copy()
        control[s] = candidate.control[s]
        periods = policy.periods.copy()
        periods[s] = candidate.periods[s]
        trial = PullPolicy(control=control, periods=periods)
        obj = canonical_objective(m, trial, cfg)
        if obj > best_obj + cfg.tolerance:
            best_policy, best_obj = trial, obj
    return best_policy, best_obj


def _alternate(
    m: Mdp, cfg: SolveConfig, start: PullPolicy, pinned: bool
) -> PullSolveResult:
    """One run of the improvement alternation from a given starting policy."""
    log: list[str] = []
    policy = start
    best_obj = canonical_objective(m, policy, cfg)
    best_policy = policy
    converged = False
    rounds = 0
    for rounds in range(1, cfg.max_iterations + 1):
        before = policy
        values = evaluate_pull(m, policy, cfg)
        candidate = improve_control(m, policy, values, cfg)
        candidate = _exact_window_rows(m, candidate, values, cfg)
        if not pinned:
            # probe periods silently; only the final policy merits the
            # no-communication warning, not transient rounds
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                candidate = improve_periods(m, candidate, values, cfg)
        stable = np.array_equal(candidate.control, before.control) and np.array_equal(
            candidate.periods, before.periods
        )
        if stable:
            converged = True
            break
        obj = canonical_objective(m, candidate, cfg)
        if obj > best_obj + cfg.tolerance:
            best_obj = obj
            best_policy = policy = candidate
            continue
        escape, escape_obj = _single_state_escape(m, cfg, policy, candidate, best_obj)
        if escape is not None:
            log.append(
                f"round {rounds}: the joint update moved the objective by "
                f"{obj - best_obj:.3g}; adopted its best single-state change instead"
            )
            best_obj = escape_obj
            best_policy = policy = escape
            continue
        msg = (
            f"round {rounds} changed the policy but neither it nor any "
            f"single-state part of it improves the objective; stopping with "
            f"the best policy seen"
        )
        log.append(msg)
        logger.info(msg)
        break
    else:
        raise IterationLimitError(
            f"pull solver did not converge in {cfg.max_iterations} rounds"
        )

    best_values = evaluate_pull(m, best_policy, cfg)
    return PullSolveResult(
        policy=best_policy,
        values=best_values,
        objective=best_obj,
        rounds=rounds,
        converged=converged,
        log=log,
    )


def _best_uniform_period_start(m: Mdp, cfg: SolveConfig) -> PullPolicy:
    """Highest-value uniform-period schedule, periods pinned, control solved."""
    n_cap = min(cfg.horizon_cap, cfg.t_max)
    best_policy, best_obj = None, -np.inf
    for period in range(1, n_cap + 1):
        res = solve_pull(
            m, cfg, pinned_periods=np.full(m.num_states, period), init="zero"
        )
        if res.objective > best_obj:
            best_policy, best_obj = res.policy, res.objective
    return best_policy


def solve_pull(
    m: Mdp,
    cfg: SolveConfig,
    pinned_periods: np.ndarray | None = None,
    init: str = "multi",
    seed: int | None = None,
) -> PullSolveResult:
    """Alternate control and period improvement until the policy is stable.

    The default mode (init="multi") runs the alternation from the zero start
    (action 0 everywhere, all periods 1) and again warm-started from the best
    uniform-period schedule, returning the better landing: the alternation is
    a local search, and the zero start alone can land below the scheduled
    baseline. init="zero" and init="random" (seeded) run a single start. With
    `pinned_periods` the periods are held fixed and only the control map
    improves; the periodic baselines use this, and init="multi" then collapses
    to the zero start. Exceeding cfg.max_iterations rounds raises.
    """
    require_valid(m)
    n_cap = min(cfg.horizon_cap, cfg.t_max)
    if init not in ("multi", "zero", "random"):
        raise ConfigurationError(
            f"unknown init {init!r}; expected 'multi', 'zero', or 'random'"
        )

    if pinned_periods is not None:
        periods = np.array(pinned_periods, dtype=int)
        if periods.shape != (m.num_states,) or np.any(periods < 1):
            raise ConfigurationError("pinned periods must be positive, one per state")

    if init == "random" and pinned_periods is None:
        rng = np.random.default_rng(seed)
        start = PullPolicy(
            control=rng.integers(0, m.num_actions, size=(m.num_states, cfg.t_max + 1)),
            periods=rng.integers(1, n_cap + 1, size=m.num_states),
        )
        result = _alternate(m, cfg, start, pinned=False)
    elif pinned_periods is not None:
        if init == "random":
            rng = np.random.default_rng(seed)
            control = rng.integers(0, m.num_actions, size=(m.num_states, cfg.t_max + 1))
        else:
            control = np.zeros((m.num_states, cfg.t_max + 1), dtype=int)
        result = _alternate(
            m, cfg, PullPolicy(control=control, periods=periods), pinned=True
        )
    else:
        zero_start = PullPolicy(
            control=np.zeros((m.num_states, cfg.t_max + 1), dtype=int),
            periods=np.ones(m.num_states, dtype=int),
        )
        result = _alternate(m, cfg, zero_start, pinned=False)
        if init == "multi":
            warm = _alternate(
                m, cfg, _best_uniform_period_start(m, cfg), pinned=False
            )
            if warm.objective > result.objective:
                result = warm

    capped = np.nonzero(result.policy.periods >= n_cap)[0]
    if pinned_periods is None and capped.size:
        warnings.warn(
            f"states {capped.tolist()} settled on the maximum period {n_cap}; "
            "they are effectively not communicating",
            stacklevel=2,
        )
    return result


def solve_pull_path(
    m: Mdp, cfg: SolveConfig, betas: list[float]
) -> list[PullSolveResult]:
    """Solve one instance across an ascending grid of update costs.

    Each cost point is first solved fresh, then neighboring landings are
    traded along the grid in both directions: whenever a neighbor's policy
    scores higher at this point's cost than the point's own result, the
    alternation is restarted here from that policy. At stability every point's
    result is at least as good, at its own cost, as both neighbors' policies.
    That pairwise dominance is what makes the landed discounted update mass
    weakly decreasing in the cost, which a fresh solve per point does not
    guarantee: the alternation is a local search, and a higher cost can land
    in a basin that both pays more and updates more.

    cfg.beta is ignored; each point uses its own grid value. Results are
    returned in grid order.
    """
    require_valid(m)
    if any(b2 < b1 for b1, b2 in zip(betas, betas[1:])):
        raise ConfigurationError("betas must be ascending")
    if not betas:
        raise ConfigurationError("betas must be nonempty")
    configs = [dataclasses.replace(cfg, beta=float(b)) for b in betas]
    with warnings.catch_warnings():
        # capped-period warnings are meaningful once per final landing, not
        # per intermediate solve; the caller can re-check the returned periods
        warnings.simplefilter("ignore")
        results = [solve_pull(m, c) for c in configs]

        for _ in range(cfg.max_iterations):
            changed = False
            order = list(range(1, len(betas))) + list(range(len(betas) - 2, -1, -1))
            neighbor = [i - 1 for i in range(1, len(betas))] + [
                i + 1 for i in range(len(betas) - 2, -1, -1)
            ]
            for i, j in zip(order, neighbor):
                incumbent = results[i].objective
                handed = canonical_objective(m, results[j].policy, configs[i])
                if handed > incumbent + cfg.tolerance:
                    restarted = _alternate(m, configs[i], results[j].policy, pinned=False)
                    if restarted.objective > incumbent + cfg.tolerance:
                        results[i] = restarted
                        changed = True
            if not changed:
                break
        else:
            raise IterationLimitError(
                "cost-path polish did not stabilize; this should not happen "
                "because every adoption strictly improves a bounded objective"
            )
    return results
