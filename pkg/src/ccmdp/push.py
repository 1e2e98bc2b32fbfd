"""Solver for push-mode communication: the observer decides when to update.

A push policy pairs a control map over (last observed state s, elapsed k)
with a transmission rule over (s, k, current state s'): the observer sees the
true state and, when the counter reaches k with the state at s', either sends
an update (resetting the pair to (s', 0) at cost beta) or stays silent. The
update at elapsed t_max is forced; the rule is first consulted at k = 1.

Between the two maps sits an information asymmetry: the controller only knows
the anchor and the silence so far, so it acts on the silence-conditioned
belief, the open-loop spread with every would-have-transmitted branch removed.
The belief is kept unnormalized; its mass is the probability the window is
still silent.

The solver alternates best responses. The control side scores one-shot
deviations on the true deviation path (exact for the same reason as in pull
mode: beliefs depend on the whole action prefix). The observer side is a
genuine finite Markov decision problem once the control map is frozen, so it
is solved by policy iteration on the augmented chain with ties broken toward
silence. Alternation of exact best responses still has no global monotonicity
guarantee, so each round's net objective is tracked and a worsening round is
rolled back.

`global_push_optimum` sidesteps policies entirely: it runs exact dynamic
programming over the reachable silence-conditioned beliefs themselves, which
bounds every deterministic push policy from above and is tight (under a
deterministic policy each (anchor, elapsed) pair carries a single belief, so
the optimizing choices can be read back as an ordinary policy).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .belief import anchor_beliefs
from .exact import augmented_chain, canonical_objective, chain_values
from .mdp import (
    ConfigurationError,
    IterationLimitError,
    Mdp,
    SolveConfig,
    require_valid,
)
from .policies import PushPolicy

logger = logging.getLogger(__name__)

OBJECTIVE_GUARD_TOL = 1e-9
TRANSMIT_TIE_TOL = 1e-12
MASS_TOL = 1e-12


def silent_beliefs(m: Mdp, policy: PushPolicy) -> np.ndarray:
    """Unnormalized silence-conditioned beliefs, shape (S, t_max+1, S).

    b[s, k, s'] is the joint probability, from a fresh update at s, that k
    steps passed with no update and the state is now s'. Entry k+1 prunes the
    branches the rule would have transmitted. The row at t_max is always zero
    mass because that update is forced.
    """
    require_valid(m)
    n, kk = m.num_states, policy.t_max + 1
    b = np.zeros((n, kk, n))
    for s in range(n):
        b[s, 0, s] = 1.0
        for k in range(kk - 1):
            a = policy.control[s, k]
            spread = b[s, k] @ m.transitions[a]
            b[s, k + 1] = spread * (1.0 - policy.transmit[s, k + 1])
    return b


def _effective_beliefs(m: Mdp, policy: PushPolicy) -> np.ndarray:
    """Silent beliefs with zero-mass rows replaced by the open-loop spread.

    Once silence is impossible (the rule transmits on every surviving branch)
    later (s, k) pairs are off path; the open-loop belief is a deterministic,
    sensible stand-in for choosing their actions.
    """
    b = silent_beliefs(m, policy)
    fallback = anchor_beliefs(m, policy.control, policy.t_max)
    mass = b.sum(axis=2)
    dead = mass <= MASS_TOL
    out = b.copy()
    out[dead] = fallback[dead]
    return out


def _window_absorption(
    m: Mdp, policy: PushPolicy, cfg: SolveConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Affine window map (M, c): sweeping anchor s's silent window forward,
    M[s, s'] collects the discounted absorption weight of an update revealing
    s' and c[s] the discounted window rewards net of update costs, so that
    the just-updated values satisfy v0 = c + M v0."""
    n, t_max = m.num_states, cfg.t_max
    er = m.expected_rewards()
    gamma, beta = m.gamma, cfg.beta
    coeffs = np.zeros((n, n))
    const = np.zeros(n)
    for s in range(n):
        b = np.zeros(n)
        b[s] = 1.0
        disc = 1.0
        for k in range(t_max):
            a = policy.control[s, k]
            const[s] += disc * float(b @ er[a])
            spread = b @ m.transitions[a]
            t_row = (
                np.ones(n) if k + 1 >= t_max else policy.transmit[s, k + 1].astype(float)
            )
            absorbed = spread * t_row
            coeffs[s] += disc * gamma * absorbed
            const[s] -= disc * gamma * float(absorbed.sum()) * beta
            b = spread - absorbed
            disc *= gamma
            if not b.any():
                break
    return coeffs, const


def evaluate_push_anchors(
    m: Mdp, policy: PushPolicy, cfg: SolveConfig
) -> np.ndarray:
    """Exact just-updated values v0(s) of a push policy, by absorption.

    Sweeping each anchor window forward turns the window into an affine map
    v0 = c + M v0, where M holds the discounted absorption weights of updates
    into each revealed state. Total discounted absorption is at most gamma,
    so I - M is invertible and one dense solve gives v0.
    """
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError("policy and config disagree on t_max")
    coeffs, const = _window_absorption(m, policy, cfg)
    return np.linalg.solve(np.eye(m.num_states) - coeffs, const)


def _anchor_occupancy(m: Mdp, policy: PushPolicy, cfg: SolveConfig) -> np.ndarray:
    """Discounted expected number of windows opened at each anchor, from the
    uniform just-updated start. Column sums of the window map M are at most
    gamma, so the renewal series converges."""
    coeffs, _ = _window_absorption(m, policy, cfg)
    start = np.full(m.num_states, 1.0 / m.num_states)
    return np.linalg.solve(np.eye(m.num_states) - coeffs.T, start)


def _conditional_window_values(
    m: Mdp, policy: PushPolicy, s: int, v0: np.ndarray, beta: float
) -> np.ndarray:
    """w[j, s']: value at elapsed j in anchor s's window given the true state
    is s', following the incumbent control row and transmission rule. Shape
    (t_max+2, S); the final row is the post-forced-reset filler."""
    n, t_max = m.num_states, policy.t_max
    target = v0 - beta
    w = np.tile(target, (t_max + 2, 1))
    er = m.expected_rewards()
    for j in range(t_max, -1, -1):
        a = policy.control[s, j]
        t_row = (
            np.ones(n) if j + 1 >= t_max else policy.transmit[s, j + 1].astype(float)
        )
        mix = t_row * target + (1.0 - t_row) * w[j + 1]
        w[j] = er[a] + m.gamma * (m.transitions[a] @ mix)
    return w


def _improve_push_control(
    m: Mdp,
    policy: PushPolicy,
    cfg: SolveConfig,
    v0: np.ndarray,
    condition_on_silence: bool = True,
) -> PushPolicy:
    """Greedy one-deviation control update against the incumbent push policy.

    Scores action a at (s, k) under the silence-conditioned belief (open-loop
    fallback off path): act once, then incumbent row to the next update.
    Ties go to the lowest action index. `condition_on_silence=False` scores
    under the unconditioned open-loop belief instead; that variant ignores
    the information carried by silence and exists for ablation.
    """
    n, t_max = m.num_states, policy.t_max
    kk = t_max + 1
    if condition_on_silence:
        beliefs = _effective_beliefs(m, policy)
    else:
        beliefs = anchor_beliefs(m, policy.control, t_max)
    er = m.expected_rewards()
    target = v0 - cfg.beta
    new_control = np.empty_like(policy.control)
    for s in range(n):
        w = _conditional_window_values(m, policy, s, v0, cfg.beta)
        # mix[j]: value by true state on arrival at elapsed j, the rule's
        # transmit-or-stay already folded in (forced at and past t_max).
        mix = np.empty((kk + 1, n))
        for j in range(kk + 1):
            if j >= t_max:
                mix[j] = target
            else:
                t_row = policy.transmit[s, j].astype(float)
                mix[j] = t_row * target + (1.0 - t_row) * w[j]
        q = np.empty((m.num_actions, kk))
        for a in range(m.num_actions):
            lookahead = er[a][None, :] + m.gamma * (mix[1:] @ m.transitions[a].T)
            q[a] = np.einsum("ks,ks->k", beliefs[s], lookahead)
        new_control[s] = np.argmax(q, axis=0)
    return PushPolicy(control=new_control, transmit=policy.transmit.copy())


def control_policy_iteration(
    m: Mdp,
    policy: PushPolicy,
    cfg: SolveConfig,
    max_rounds: int = 100,
    condition_on_silence: bool = True,
) -> tuple[PushPolicy, list[str]]:
    """Best-response control map to a frozen transmission rule.

    Alternates exact evaluation with greedy one-deviation updates. The greedy
    map rewrites every row at once and simultaneous changes interact through
    the silence-conditioned beliefs, so adopting it can fail to raise, or even
    lower, the mean just-updated value. When that happens the round retries
    the changed entries one at a time, highest expected leverage first, and
    adopts the first single change that raises the value. If none does, the
    incumbent map is returned. `condition_on_silence=False` switches the
    improvement to the unconditioned open-loop belief, for ablation.
    """
    log: list[str] = []
    current = policy
    current_score = float(np.mean(evaluate_push_anchors(m, current, cfg)))
    for _ in range(max_rounds):
        v0 = evaluate_push_anchors(m, current, cfg)
        improved = _improve_push_control(
            m, current, cfg, v0, condition_on_silence=condition_on_silence
        )
        if np.array_equal(improved.control, current.control):
            return current, log
        score = float(np.mean(evaluate_push_anchors(m, improved, cfg)))
        if score > current_score + OBJECTIVE_GUARD_TOL:
            current, current_score = improved, score
            continue
        changes = np.argwhere(improved.control != current.control)
        occ = _anchor_occupancy(m, current, cfg)
        beliefs = silent_beliefs(m, current)
        leverage = np.array(
            [occ[s] * m.gamma**k * beliefs[s, k].sum() for s, k in changes]
        )
        adopted = False
        for idx in np.argsort(-leverage):
            s, k = changes[idx]
            trial_control = current.control.copy()
            trial_control[s, k] = improved.control[s, k]
            trial = PushPolicy(
                control=trial_control, transmit=current.transmit.copy()
            )
            trial_score = float(np.mean(evaluate_push_anchors(m, trial, cfg)))
            if trial_score > current_score + OBJECTIVE_GUARD_TOL:
                current, current_score = trial, trial_score
                adopted = True
                break
        if not adopted:
            log.append(
                "neither the greedy control map nor any single change in it "
                "raises the mean anchor value; kept the incumbent map"
            )
            return current, log
    raise IterationLimitError(
        f"control best response did not settle in {max_rounds} rounds"
    )


def communication_policy_iteration(
    m: Mdp, policy: PushPolicy, cfg: SolveConfig, max_rounds: int = 100
) -> tuple[PushPolicy, list[str]]:
    """Best-response transmission rule to a frozen control map.

    With the control map fixed the observer faces an ordinary finite MDP over
    (s, k, s') triples. Each round evaluates the incumbent rule's just-updated
    anchor values, runs one backward pass per anchor window choosing at every
    triple between revealing (anchor value net of beta) and staying silent
    (frozen-control continuation of the chosen downstream decisions), and
    repeats until the rule stops changing. Ties keep the incumbent decision,
    otherwise triples indifferent at beta = 0 flicker forever.

    The chosen rule is only adopted on triples its own silent window reaches
    with positive mass; unreachable rows keep their incumbent entries. A rule
    is a best response no matter what it says on zero-mass triples, and
    rewriting them anyway changes answers: a silent profile would grow
    transmissions on counterfactual branches, which the next control round
    then treats as free information and the dynamics walk away from an
    equilibrium they were already at.
    """
    log: list[str] = []
    current = policy
    n, t_max = m.num_states, cfg.t_max
    er = m.expected_rewards()
    for _ in range(max_rounds):
        v0 = evaluate_push_anchors(m, current, cfg)
        reset_val = v0 - cfg.beta
        new_t = current.transmit.copy()
        for s in range(n):
            # backward: value of arriving at (s, k, s') after its decision
            arrival_val = np.tile(reset_val, (t_max + 1, 1))
            chosen = np.zeros((t_max + 1, n), dtype=np.uint8)
            for k in range(t_max - 1, 0, -1):
                a = current.control[s, k]
                silent = er[a] + m.gamma * (m.transitions[a] @ arrival_val[k + 1])
                incumbent = current.transmit[s, k].astype(bool)
                transmit = np.where(
                    incumbent,
                    reset_val - silent > 0.0,
                    reset_val - silent > TRANSMIT_TIE_TOL,
                )
                chosen[k] = transmit.astype(np.uint8)
                arrival_val[k] = np.where(transmit, reset_val, silent)
            # forward: adopt the chosen rule only where its own window
            # carries mass, then prune by the adopted row
            b = np.zeros(n)
            b[s] = 1.0
            for k in range(1, t_max):
                arrival = b @ m.transitions[current.control[s, k - 1]]
                live = arrival > MASS_TOL
                if not live.any():
                    break
                new_t[s, k] = np.where(live, chosen[k], current.transmit[s, k])
                b = arrival * (1.0 - new_t[s, k])
        candidate = PushPolicy(control=current.control.copy(), transmit=new_t)
        if np.array_equal(candidate.transmit, current.transmit):
            return current, log
        current = candidate
    raise IterationLimitError(
        f"transmission best response did not settle in {max_rounds} rounds"
    )


@dataclass
class PushRoundReport:
    round: int
    objective: float
    control_changes: int
    transmit_changes: int


@dataclass
class PushSolveResult:
    policy: PushPolicy
    objective: float
    rounds: list[PushRoundReport]
    converged: bool
    log: list[str] = field(default_factory=list)


def _init_policy(
    m: Mdp,
    cfg: SolveConfig,
    init: str,
    seed: int | None,
) -> PushPolicy:
    n, kk = m.num_states, cfg.t_max + 1
    if init == "always":
        transmit = np.ones((n, kk, n), dtype=np.uint8)
        control = np.zeros((n, kk), dtype=int)
    elif init == "never":
        transmit = np.zeros((n, kk, n), dtype=np.uint8)
        control = np.zeros((n, kk), dtype=int)
    elif init == "random":
        rng = np.random.default_rng(seed)
        transmit = rng.integers(0, 2, size=(n, kk, n), dtype=np.uint8)
        control = rng.integers(0, m.num_actions, size=(n, kk))
    else:
        raise ConfigurationError(
            f"unknown init {init!r}; expected 'always', 'never' or 'random'"
        )
    return PushPolicy(control=control, transmit=transmit)


def solve_push_api(
    m: Mdp,
    cfg: SolveConfig,
    init: str = "always",
    initial_policy: PushPolicy | None = None,
    seed: int | None = None,
    max_rounds: int = 50,
    condition_on_silence: bool = True,
) -> PushSolveResult:
    """Alternate control and transmission best responses from a chosen start.

    `init` seeds the transmission rule ('always', 'never', or seeded
    'random'); an explicit `initial_policy` overrides it. Each round reports
    the exact net objective and how many entries each map changed. A round
    that lowers the objective is rolled back and the best policy seen is
    returned; convergence means a round changed nothing, which makes the
    result a mutual best response (an equilibrium of the two sub-solvers).
    Exhausting `max_rounds` without convergence or rollback raises.
    """
    require_valid(m)
    if initial_policy is not None:
        policy = initial_policy
        if policy.t_max != cfg.t_max:
            raise ConfigurationError("initial policy and config disagree on t_max")
        if policy.num_states != m.num_states:
            raise ConfigurationError("initial policy does not match the MDP size")
    else:
        policy = _init_policy(m, cfg, init, seed)

    log: list[str] = []
    obj = canonical_objective(m, policy, cfg)
    reports = [PushRoundReport(0, obj, 0, 0)]
    best_obj, best_policy = obj, policy
    converged = False
    for r in range(1, max_rounds + 1):
        after_control, ctrl_log = control_policy_iteration(
            m, policy, cfg, condition_on_silence=condition_on_silence
        )
        after_comm, comm_log = communication_policy_iteration(m, after_control, cfg)
        log.extend(ctrl_log)
        log.extend(comm_log)
        obj = canonical_objective(m, after_comm, cfg)
        reports.append(
            PushRoundReport(
                round=r,
                objective=obj,
                control_changes=int(
                    np.sum(after_comm.control != policy.control)
                ),
                transmit_changes=int(
                    np.sum(after_comm.transmit != policy.transmit)
                ),
            )
        )
        if obj < best_obj - OBJECTIVE_GUARD_TOL:
            msg = (
                f"round {r} lowered the net objective "
                f"({best_obj:.12g} -> {obj:.12g}); rolled back"
            )
            log.append(msg)
            logger.warning(msg)
            warnings.warn(msg, stacklevel=2)
            break
        if obj > best_obj:
            best_obj, best_policy = obj, after_comm
        if np.array_equal(after_comm.control, policy.control) and np.array_equal(
            after_comm.transmit, policy.transmit
        ):
            converged = True
            best_obj, best_policy = obj, after_comm
            break
        policy = after_comm
    else:
        raise IterationLimitError(
            f"push solver did not converge in {max_rounds} rounds"
        )

    return PushSolveResult(
        policy=best_policy,
        objective=best_obj,
        rounds=reports,
        converged=converged,
        log=log,
    )


@dataclass
class PushEquilibriumReport:
    is_equilibrium: bool
    control_advantage: float
    transmit_advantage: float
    control_deviations: list[tuple[int, int, int]] = field(default_factory=list)
    transmit_deviations: list[tuple[int, int, int]] = field(default_factory=list)


def is_push_equilibrium(
    m: Mdp, policy: PushPolicy, cfg: SolveConfig, tol: float = 1e-8
) -> PushEquilibriumReport:
    """Check that no one-shot deviation improves the discounted objective.

    Control side: at every (s, k) with positive silence probability, compare
    each action's deviation-path value under the normalized belief with the
    incumbent action's. Observer side: at every (s, k, s') a silent window can
    actually reach with k below the forced cap, compare the revealed
    continuation net of beta with the silent one. Off-path points are ignored;
    deviating there cannot change the objective.

    Each pointwise gain is weighted by the point's discounted reachability
    from the uniform just-updated start (window entries times gamma^k times
    silence mass), so the reported advantages are objective improvements, the
    same units as canonical_objective. The weighting is what makes the check
    a statement about the discounted game rather than about every nominal
    decision point: the forced refresh at the elapsed-time cap distorts the
    last one or two rows of any long-silence policy, and those rows carry
    discounted weight near gamma**t_max, far below any meaningful tolerance.
    """
    require_valid(m)
    if policy.t_max != cfg.t_max:
        raise ConfigurationError("policy and config disagree on t_max")
    n, t_max = m.num_states, cfg.t_max
    chain = augmented_chain(m, policy, cfg)
    v_net, _, _ = chain_values(chain, m.gamma)
    v3 = v_net.reshape(n, t_max + 1, n)
    reset_val = v3[np.arange(n), 0, np.arange(n)] - cfg.beta
    v0 = v3[np.arange(n), 0, np.arange(n)]
    beliefs = silent_beliefs(m, policy)
    occ = _anchor_occupancy(m, policy, cfg)
    er = m.expected_rewards()

    control_adv = -np.inf
    control_devs: list[tuple[int, int, int]] = []
    for s in range(n):
        w = _conditional_window_values(m, policy, s, v0, cfg.beta)
        mix = np.empty((t_max + 2, n))
        for j in range(t_max + 2):
            if j >= t_max:
                mix[j] = reset_val
            else:
                t_row = policy.transmit[s, j].astype(float)
                mix[j] = t_row * reset_val + (1.0 - t_row) * w[j]
        for k in range(t_max + 1):
            mass = beliefs[s, k].sum()
            if mass <= MASS_TOL:
                continue
            bn = beliefs[s, k] / mass
            q = np.array(
                [
                    float(bn @ (er[a] + m.gamma * (m.transitions[a] @ mix[k + 1])))
                    for a in range(m.num_actions)
                ]
            )
            weight = occ[s] * m.gamma**k * mass
            adv = weight * float(q.max() - q[policy.control[s, k]])
            if adv > control_adv:
                control_adv = adv
            if adv > tol:
                control_devs.append((s, k, int(q.argmax())))

    transmit_adv = -np.inf
    transmit_devs: list[tuple[int, int, int]] = []
    for s in range(n):
        for k in range(1, t_max):
            prev = beliefs[s, k - 1]
            if prev.sum() <= MASS_TOL:
                continue
            arrival = prev @ m.transitions[policy.control[s, k - 1]]
            for s2 in np.nonzero(arrival > MASS_TOL)[0]:
                gain = reset_val[s2] - v3[s, k, s2]
                if not policy.transmit[s, k, s2]:
                    adv = gain
                else:
                    adv = -gain
                adv = occ[s] * m.gamma**k * float(arrival[s2]) * adv
                if adv > transmit_adv:
                    transmit_adv = float(adv)
                if adv > tol:
                    transmit_devs.append((s, k, int(s2)))

    return PushEquilibriumReport(
        is_equilibrium=(control_adv <= tol and transmit_adv <= tol),
        control_advantage=control_adv,
        transmit_advantage=transmit_adv,
        control_deviations=control_devs,
        transmit_deviations=transmit_devs,
    )


@dataclass
class GlobalPushOptimum:
    values: np.ndarray
    objective: float
    policy: PushPolicy
    nodes: int
    outer_iterations: int


def global_push_optimum(
    m: Mdp,
    cfg: SolveConfig,
    node_budget: int = 1_000_000,
    max_outer: int = 100,
) -> GlobalPushOptimum:
    """Exact optimum over all deterministic push policies, by belief DP.

    Within a window the controller's information state is the unnormalized
    silence-conditioned belief, which evolves deterministically given the
    action and the set of arrival states the observer reveals. Backward over
    elapsed time, each node (anchor, k, belief) maximizes over the action and
    over every subset of the arrival support to transmit, with the forced
    full transmit at t_max. Under deterministic choices each reachable node
    is visited with one belief, so the maximizing choices read back as an
    ordinary push policy; the outer loop alternates that greedy extraction
    with exact evaluation of the extracted policy (policy iteration on the
    finite belief graph) until the anchor values stop moving. The node budget
    bounds the memo size per pass; exceeding it raises rather than
    approximating, as does an arrival support too wide to enumerate subsets.
    """
    require_valid(m)
    n, t_max = m.num_states, cfg.t_max
    er = m.expected_rewards()
    gamma, beta = m.gamma, cfg.beta
    v0 = np.zeros(n)
    nodes_seen = 0
    policy: PushPolicy | None = None
    for outer in range(1, max_outer + 1):
        target = v0 - beta
        memo: dict[tuple[int, int, bytes], tuple[float, int, tuple[int, ...]]] = {}

        def node_value(s: int, k: int, b: np.ndarray) -> float:
            nonlocal nodes_seen
            if not b.any():
                return 0.0
            key = (s, k, b.round(12).tobytes())
            cached = memo.get(key)
            if cached is not None:
                return cached[0]
            if len(memo) >= node_budget:
                raise IterationLimitError(
                    f"belief DP exceeded the node budget of {node_budget}"
                )
            best = -np.inf
            best_choice = (0, ())
            for a in range(m.num_actions):
                step_reward = float(b @ er[a])
                c = b @ m.transitions[a]
                if k + 1 >= t_max:
                    cand = step_reward + gamma * float(c @ target)
                    if cand > best:
                        best, best_choice = cand, (a, ())
                else:
                    supp = np.nonzero(c > 1e-15)[0]
                    if len(supp) > 20:
                        raise IterationLimitError(
                            "arrival support too wide for subset enumeration"
                        )
                    for mask in range(1 << len(supp)):
                        sent = supp[[bool(mask >> i & 1) for i in range(len(supp))]]
                        revealed = float(c[sent] @ target[sent])
                        b_next = c.copy()
                        b_next[sent] = 0.0
                        cont = node_value(s, k + 1, b_next)
                        cand = step_reward + gamma * (revealed + cont)
                        if cand > best:
                            best, best_choice = cand, (a, tuple(int(x) for x in sent))
            memo[key] = (best, *best_choice)
            nodes_seen += 1
            return best

        v_greedy = np.array([node_value(s, 0, np.eye(n)[s]) for s in range(n)])

        # Read the maximizing choices back as a policy by walking each
        # anchor's single on-path belief trajectory.
        control = np.zeros((n, t_max + 1), dtype=int)
        transmit = np.zeros((n, t_max + 1, n), dtype=np.uint8)
        for s in range(n):
            b = np.eye(n)[s]
            for k in range(t_max):
                if not b.any():
                    break
                _, a, sent = memo[(s, k, b.round(12).tobytes())]
                control[s, k] = a
                c = b @ m.transitions[a]
                if k + 1 >= t_max:
                    break
                transmit[s, k + 1, list(sent)] = 1
                b = c.copy()
                b[list(sent)] = 0.0
        extracted = PushPolicy(control=control, transmit=transmit)

        v_new = evaluate_push_anchors(m, extracted, cfg)
        stable = policy is not None and np.array_equal(
            extracted.control, policy.control
        ) and np.array_equal(extracted.transmit, policy.transmit)
        policy = extracted
        if stable or np.max(np.abs(v_new - v0)) < cfg.tolerance:
            return GlobalPushOptimum(
                values=v_new,
                objective=float(v_new.mean()),
                policy=extracted,
                nodes=nodes_seen,
                outer_iterations=outer,
            )
        v0 = v_new
    raise IterationLimitError("global optimum fixed point did not converge")
