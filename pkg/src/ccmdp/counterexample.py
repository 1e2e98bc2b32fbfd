"""A 5-state instance where push communication has two very different equilibria.

The chain has a long cycle 0 -> 1 -> 2 -> 3 -> 0 under the first action and a
short cycle 0 -> 4 -> 0 reachable through the second action, which from state
0 moves to state 1 or state 4 with probability one half each. Reward 1 is paid
on every transition into state 0. A controller that always knows the state
rides the short cycle; a blind one must fall back on the deterministic long
cycle. That gap gives the push solver two self-consistent resting points:

* an informed equilibrium: try the short cycle, and the observer transmits
  exactly when the environment deviates to state 1 (silence then certifies the
  short-cycle branch), paying beta only on the deviating half of the steps;
* a silent equilibrium: never transmit, and the controller keeps to the long
  cycle it can follow with its eyes closed.

Hand-solvable renewal recursions give closed forms for the value of entering
state 0 under these schemes and under the period-2 scheduled baseline, so the
whole construction doubles as an end-to-end check of the exact evaluators:
`verify_counterexample` re-solves everything numerically, confirms both
equilibria, locates the cost threshold where the scheduled baseline stops
beating never-communicating, and cross-checks a bounded-horizon exhaustive
search over all deterministic push policies.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import solve_aoi_periodic
from .exact import canonical_objective, entry_value
from .mdp import ConfigurationError, Mdp, SolveConfig
from .policies import PullPolicy, PushPolicy
from .pull import solve_pull
from .push import (
    evaluate_push_anchors,
    global_push_optimum,
    is_push_equilibrium,
    solve_push_api,
)

NUM_STATES = 5
LONG_ACTION = 0
SHORT_ACTION = 1

# Believed successor while silent, per state, under the informed-equilibrium
# action map: the long-cycle states step deterministically; state 0 under the
# short action is believed to reach 4 because a move to 1 would have been
# reported.
_BELIEVED_NEXT = {0: 4, 1: 2, 2: 3, 3: 0, 4: 0}
_INFORMED_ACTION = {0: SHORT_ACTION, 1: LONG_ACTION, 2: LONG_ACTION,
                    3: LONG_ACTION, 4: SHORT_ACTION}


@dataclass(frozen=True)
class CounterexampleInstance:
    mdp: Mdp
    gamma: float
    beta: float

    def solve_config(self, t_max: int, **overrides) -> SolveConfig:
        kwargs = dict(beta=self.beta, t_max=t_max, horizon_cap=t_max)
        kwargs.update(overrides)
        return SolveConfig(**kwargs)


def build_counterexample(gamma: float = 0.9, beta: float = 0.0) -> CounterexampleInstance:
    """The fixed 5-state, 2-action instance described in the module docstring."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must lie in (0, 1), got {gamma}")
    if beta < 0.0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}")
    p_long = np.zeros((NUM_STATES, NUM_STATES))
    for s, t in [(0, 1), (1, 2), (2, 3), (3, 0), (4, 4)]:
        p_long[s, t] = 1.0
    p_short = np.zeros((NUM_STATES, NUM_STATES))
    p_short[0, 1] = 0.5
    p_short[0, 4] = 0.5
    p_short[1, 1] = 1.0
    p_short[2, 2] = 1.0
    p_short[3, 3] = 1.0
    p_short[4, 0] = 1.0
    transitions = np.stack([p_long, p_short])
    rewards = np.zeros_like(transitions)
    rewards[:, :, 0] = 1.0
    rewards[transitions == 0.0] = 0.0
    m = Mdp(transitions=transitions, rewards=rewards, gamma=gamma)
    return CounterexampleInstance(mdp=m, gamma=gamma, beta=beta)


def always_init_equilibrium(t_max: int) -> PushPolicy:
    """The informed equilibrium: transmit exactly on deviation to state 1.

    The control map follows the believed path: silence certifies the
    short-cycle branch, so beliefs stay a single state and the controller is
    never actually wrong while the rule is in force.
    """
    control = np.zeros((NUM_STATES, t_max + 1), dtype=int)
    for s in range(NUM_STATES):
        believed = s
        for k in range(t_max + 1):
            control[s, k] = _INFORMED_ACTION[believed]
            believed = _BELIEVED_NEXT[believed]
    transmit = np.zeros((NUM_STATES, t_max + 1, NUM_STATES), dtype=np.uint8)
    transmit[:, 1:, 1] = 1
    return PushPolicy(control=control, transmit=transmit)


def never_init_equilibrium(t_max: int) -> PushPolicy:
    """The silent equilibrium: never transmit, ride the deterministic long cycle.

    Anchors 0..3 take the long action forever. Anchor 4 first hops to 0 with
    the short action (the only way off the absorbing state), then follows the
    long cycle blind. Every anchor's open-loop belief stays a single state, so
    updates carry no information and declining to pay for them is a best
    response at every cost level.
    """
    control = np.zeros((NUM_STATES, t_max + 1), dtype=int)
    control[4, 0] = SHORT_ACTION
    transmit = np.zeros((NUM_STATES, t_max + 1, NUM_STATES), dtype=np.uint8)
    return PushPolicy(control=control, transmit=transmit)


def closed_form_aoi(gamma: float, beta: float) -> float:
    """Entering-state-0 value of the period-2 schedule, from its renewal recursion."""
    return (2.0 - (2.0 * gamma + gamma**3) * beta) / (2.0 - gamma**2 - gamma**4)


def closed_form_push(gamma: float, beta: float) -> float:
    """Entering-state-0 value of the informed push equilibrium."""
    return (2.0 - gamma * beta) / (2.0 - gamma**2 - gamma**4)


def closed_form_never(gamma: float) -> float:
    """Entering-state-0 value of the silent equilibrium (cost-free, beta-free)."""
    return 1.0 / (1.0 - gamma**4)


def crossover_beta(gamma: float) -> float:
    """Cost where the period-2 schedule and never-communicating tie, from the
    closed forms above."""
    return gamma / ((1.0 + gamma**2) * (2.0 + gamma**2))


def alt_form_aoi(gamma: float, beta: float) -> float:
    """Variant of closed_form_aoi with denominator 2(1-gamma^2-gamma^4).

    Algebraically inconsistent with the renewal recursion it comes from (the
    denominator goes negative for gamma above about 0.786); kept so the
    verifier can label which symbolic candidate the measurements support.
    """
    return (2.0 - (2.0 * gamma + gamma**3) * beta) / (2.0 * (1.0 - gamma**2 - gamma**4))


def alt_form_push(gamma: float, beta: float) -> float:
    """Variant of closed_form_push with denominator 2(1-gamma^2-gamma^4)."""
    return (2.0 - gamma * beta) / (2.0 * (1.0 - gamma**2 - gamma**4))


def alt_crossover_beta(gamma: float) -> float:
    """Variant threshold 2/((2+gamma^2)(1-gamma^4)) paired with the alt forms."""
    return 2.0 / ((2.0 + gamma**2) * (1.0 - gamma**4))


@dataclass
class BetaRow:
    beta: float
    aoi: float
    always: float
    never: float
    always_is_equilibrium: bool
    never_is_equilibrium: bool
    failures: list[str] = field(default_factory=list)


@dataclass
class CounterexampleVerdict:
    gamma: float
    t_max: int
    rows: list[BetaRow]
    threshold: float
    threshold_candidates: dict[str, float]
    matched_candidate: str | None
    closed_form_max_error: float
    dp_check: dict[str, float]
    failures: list[str]
    passed: bool

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    def lines(self) -> list[str]:
        out = [
            f"counterexample verification at gamma={self.gamma}, t_max={self.t_max}",
            f"  closed-form max abs error: {self.closed_form_max_error:.3g}",
            f"  schedule-vs-silent threshold: beta = {self.threshold:.4f} "
            f"(derived candidate {self.threshold_candidates['derived']:.4f}, "
            f"alternate {self.threshold_candidates['alternate']:.4f}; "
            f"matches: {self.matched_candidate})",
        ]
        for r in self.rows:
            mark = "ok " if not r.failures else "FAIL"
            out.append(
                f"  [{mark}] beta={r.beta:4.1f}: always-start={r.always: 9.5f} "
                f"schedule={r.aoi: 9.5f} never-start={r.never: 9.5f} "
                f"NE(always)={r.always_is_equilibrium} "
                f"NE(never)={r.never_is_equilibrium}"
            )
            out.extend(f"      {f}" for f in r.failures)
        out.append(
            "  bounded-horizon optimum check: "
            + ", ".join(f"{k}={v:.6f}" for k, v in self.dp_check.items())
        )
        for f in self.failures:
            out.append(f"  FAIL {f}")
        out.append("  PASSED" if self.passed else "  FAILED")
        return out


def _entry_values_for_beta(
    inst: CounterexampleInstance,
    beta: float,
    t_max: int,
    aoi_policy: PullPolicy,
    never_policy: PushPolicy,
) -> tuple[float, float]:
    """Entering-state-0 values of the fixed schedule and silent policies at a
    new beta. Both maps are beta-invariant (the schedule's reset shift is
    uniform across states; the silent policy never pays), so re-evaluation is
    exact without re-solving."""
    cfg = SolveConfig(beta=beta, t_max=t_max, horizon_cap=t_max)
    aoi = entry_value(inst.mdp, aoi_policy, cfg, 0)
    never = entry_value(inst.mdp, never_policy, cfg, 0)
    return aoi, never


def verify_counterexample(
    gamma: float = 0.9,
    beta_grid: list[float] | None = None,
    t_max: int = 250,
    dp_t_max: int = 16,
    dp_beta: float = 0.1,
    tol: float = 1e-7,
) -> CounterexampleVerdict:
    """Re-derive every claim about the 5-state instance numerically.

    Per grid beta: evaluate the hand-built informed and silent policies and
    the period-2 schedule against their closed forms, then run the push
    solver from the always-communicate and never-communicate starts and check
    the dynamics claims on what it returns: both runs converge to verified
    equilibria, the always start strictly beats the schedule for beta > 0 and
    ties it at beta = 0, and the never start does at least as well as the
    silent scheme. Then bisect the schedule-vs-silent tie to within 0.005 and
    label which symbolic threshold candidate it matches, and at a bounded
    horizon confirm by exhaustive search that the informed equilibrium is the
    global push optimum and beats the pull optimum on every anchor.

    The always start does not generally land on the informed pattern itself:
    above the crossover it finds hybrid equilibria worth more than the
    informed scheme, and even below it can settle on a mirrored equilibrium
    that reports the rewarding dither branch rather than the stranded one.
    The closed forms are therefore checked on the hand policies, and the
    solver output only against the claims the dynamics actually make.

    t_max must be large enough that the forced-update tail is below tol;
    the default 250 puts it around 1e-11 at gamma = 0.9.
    """
    if beta_grid is None:
        beta_grid = [round(0.1 * i, 10) for i in range(21)]
    if not beta_grid:
        raise ConfigurationError("beta grid must be nonempty")
    inst = build_counterexample(gamma)
    m = inst.mdp
    failures: list[str] = []
    rows: list[BetaRow] = []
    cf_err = 0.0

    aoi_policy_for_bisect: PullPolicy | None = None
    never_policy_for_bisect: PushPolicy | None = None

    informed_hand = always_init_equilibrium(t_max)
    silent_hand = never_init_equilibrium(t_max)

    for beta in beta_grid:
        cfg = SolveConfig(beta=beta, t_max=t_max, horizon_cap=t_max)
        row_fail: list[str] = []

        aoi_res = solve_aoi_periodic(m, cfg, period=2)
        always_res = solve_push_api(m, cfg, init="always")
        never_res = solve_push_api(m, cfg, init="never")
        aoi_policy_for_bisect = aoi_res.policy
        never_policy_for_bisect = silent_hand

        v_aoi = entry_value(m, aoi_res.policy, cfg, 0)
        v_always = entry_value(m, always_res.policy, cfg, 0)
        v_never = entry_value(m, never_res.policy, cfg, 0)
        v_informed_hand = entry_value(m, informed_hand, cfg, 0)
        v_silent_hand = entry_value(m, silent_hand, cfg, 0)

        for name, got, want in [
            ("schedule", v_aoi, closed_form_aoi(gamma, beta)),
            ("informed scheme", v_informed_hand, closed_form_push(gamma, beta)),
            ("silent scheme", v_silent_hand, closed_form_never(gamma)),
        ]:
            err = abs(got - want)
            cf_err = max(cf_err, err)
            if err > tol:
                row_fail.append(
                    f"{name} value {got:.10f} differs from closed form "
                    f"{want:.10f} by {err:.3g}"
                )

        # the never start usually lands with the entering state's window
        # exactly on the silent scheme, but other windows may pick up
        # genuinely profitable structure, and occasionally it spills over;
        # the claim that holds is one-sided
        if v_never < closed_form_never(gamma) - tol:
            row_fail.append(
                f"never-start result {v_never:.10f} fell below the silent "
                f"scheme value {closed_form_never(gamma):.10f}"
            )

        ne_always = is_push_equilibrium(m, always_res.policy, cfg)
        ne_never = is_push_equilibrium(m, never_res.policy, cfg)
        if not always_res.converged:
            row_fail.append("always-start solve did not converge")
        if not never_res.converged:
            row_fail.append("never-start solve did not converge")
        if not ne_always.is_equilibrium:
            row_fail.append(
                f"always-start result admits a deviation gaining "
                f"{max(ne_always.control_advantage, ne_always.transmit_advantage):.3g}"
            )
        if not ne_never.is_equilibrium:
            row_fail.append(
                f"never-start result admits a deviation gaining "
                f"{max(ne_never.control_advantage, ne_never.transmit_advantage):.3g}"
            )

        if beta == 0.0:
            if abs(v_always - v_aoi) > tol:
                row_fail.append("always-start and schedule values differ at beta=0")
            if not v_never < v_always - 1e-6:
                row_fail.append("silent scheme not strictly worse at beta=0")
        else:
            if not v_always > v_aoi + 1e-12:
                row_fail.append("always-start result does not beat the schedule")

        rows.append(
            BetaRow(
                beta=float(beta),
                aoi=v_aoi,
                always=v_always,
                never=v_never,
                always_is_equilibrium=ne_always.is_equilibrium,
                never_is_equilibrium=ne_never.is_equilibrium,
                failures=row_fail,
            )
        )

    # Locate the schedule-vs-silent tie. The schedule value falls linearly in
    # beta while the silent value is flat, so the sign change is single.
    lo, hi = 0.0, max(max(beta_grid), 1.0)

    def f(b: float) -> tuple[float, float]:
        return _entry_values_for_beta(
            inst, b, t_max, aoi_policy_for_bisect, never_policy_for_bisect
        )

    aoi_lo, never_lo = f(lo)
    aoi_hi, never_hi = f(hi)
    if not (aoi_lo > never_lo and aoi_hi < never_hi):
        failures.append("schedule-vs-silent difference does not change sign on the grid")
        threshold = float("nan")
    else:
        while hi - lo > 0.01:
            mid = 0.5 * (lo + hi)
            a, nv = f(mid)
            if a > nv:
                lo = mid
            else:
                hi = mid
        threshold = 0.5 * (lo + hi)

    candidates = {
        "derived": crossover_beta(gamma),
        "alternate": alt_crossover_beta(gamma),
    }
    matched = None
    for name, cand in candidates.items():
        if abs(threshold - cand) <= 0.011:
            matched = name
            break
    if matched != "derived":
        failures.append(
            f"threshold {threshold:.4f} does not match the derived candidate "
            f"{candidates['derived']:.4f}"
        )

    # Orderings on each side of the located threshold.
    for r in rows:
        if r.beta < threshold - 0.02 and not r.aoi > r.never:
            r.failures.append("schedule should beat silent below the threshold")
        if r.beta > threshold + 0.02 and not r.never >= r.aoi - 1e-12:
            r.failures.append("silent should be at least the schedule above the threshold")

    # Large beta: paying for scheduled updates is worse than silence.
    beta_large = 5.0
    a_large, n_large = f(beta_large)
    if not n_large >= a_large:
        failures.append("silent scheme should win at beta=5")

    # Bounded-horizon exhaustive optimum. The informed pattern follows the
    # unbounded-horizon rule even next to the forced update, where the true
    # argmax flips its last transmission, so the gap to the global optimum is
    # a boundary term of order (gamma/2)^t_max; the default horizon 16 puts it
    # under 1e-8 at gamma = 0.9. The solver result is compared at the big
    # horizon against the closed forms above, which ties the two together.
    cfg_dp = SolveConfig(beta=dp_beta, t_max=dp_t_max, horizon_cap=dp_t_max)
    informed_dp = always_init_equilibrium(dp_t_max)
    api_dp = solve_push_api(m, cfg_dp, init="always")
    optimum_dp = global_push_optimum(m, cfg_dp)
    with warnings.catch_warnings():
        # the non-communicating state legitimately pins its pull period to
        # the short bounded horizon here
        warnings.simplefilter("ignore")
        pull_dp = solve_pull(m, cfg_dp)
    push_anchor_values = evaluate_push_anchors(m, informed_dp, cfg_dp)
    pull_anchor_values = pull_dp.values[:, 0]
    dp_check = {
        "beta": dp_beta,
        "t_max": float(dp_t_max),
        "global_optimum": optimum_dp.objective,
        "informed_equilibrium": canonical_objective(m, informed_dp, cfg_dp),
        "api_objective": canonical_objective(m, api_dp.policy, cfg_dp),
        "pull_optimum": pull_dp.objective,
    }
    gap = dp_check["global_optimum"] - dp_check["informed_equilibrium"]
    if not -1e-9 <= gap <= 1e-8:
        failures.append(
            f"informed pattern is off the bounded-horizon global optimum by {gap:.3g}"
        )
    if dp_check["api_objective"] > dp_check["global_optimum"] + 1e-9:
        failures.append("solver result exceeds the exhaustive optimum, impossible")
    if not (
        np.all(push_anchor_values >= pull_anchor_values - 1e-9)
        and np.any(push_anchor_values > pull_anchor_values + 1e-9)
    ):
        failures.append(
            "informed equilibrium does not dominate the pull optimum per anchor"
        )

    passed = not failures and all(not r.failures for r in rows)
    return CounterexampleVerdict(
        gamma=gamma,
        t_max=t_max,
        rows=rows,
        threshold=threshold,
        threshold_candidates=candidates,
        matched_candidate=matched,
        closed_form_max_error=cf_err,
        dp_check=dp_check,
        failures=failures,
        passed=passed,
    )
