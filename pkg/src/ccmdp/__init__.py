"""Solvers for Markov decision processes where the controller sees the state
only through costly updates.

Two update regimes share one evaluation stack. In the pull regime the
controller requests the state on a fixed per-state period; in the push regime
an observer watches the state and decides when to transmit. Periodic
schedules give the age-of-information baseline, and a small hand-analyzed
instance exercises the regime gap end to end.
"""

from .baselines import AoiSolveResult, solve_aoi_periodic
from .belief import (
    anchor_beliefs,
    expected_path_return,
    propagate_belief,
    sequence_probability,
)
from .counterexample import (
    BetaRow,
    CounterexampleInstance,
    CounterexampleVerdict,
    always_init_equilibrium,
    build_counterexample,
    closed_form_aoi,
    closed_form_never,
    closed_form_push,
    crossover_beta,
    never_init_equilibrium,
    verify_counterexample,
)
from .evaluation import (
    Dominance,
    EvaluationReport,
    pareto_dominates,
    scheme_dominates,
    simulate,
)
from .exact import (
    AugmentedChain,
    augmented_chain,
    canonical_objective,
    chain_values,
    entry_value,
    evaluate_joint_policy_exact,
    reachable_indices,
    stationary_distribution,
)
from .generator import REWARD_ALPHAS, GeneratorSpec, SuiteInstance, generate_suite
from .mdp import (
    AugmentedState,
    ConfigurationError,
    IterationLimitError,
    Mdp,
    SolveConfig,
    require_valid,
    solve_full_observability,
    validate_mdp,
    value_bound,
)
from .policies import PeriodicSchedule, PullPolicy, PushPolicy, periodic_policy
from .pull import (
    PullSolveResult,
    evaluate_pull,
    improve_control,
    improve_periods,
    solve_pull,
    solve_pull_path,
    value_update_sweep,
)
from .push import (
    GlobalPushOptimum,
    PushEquilibriumReport,
    PushRoundReport,
    PushSolveResult,
    communication_policy_iteration,
    control_policy_iteration,
    evaluate_push_anchors,
    global_push_optimum,
    is_push_equilibrium,
    silent_beliefs,
    solve_push_api,
)

__version__ = "0.1.0"

__all__ = [
    "AoiSolveResult",
    "AugmentedChain",
    "AugmentedState",
    "BetaRow",
    "ConfigurationError",
    "CounterexampleInstance",
    "CounterexampleVerdict",
    "Dominance",
    "EvaluationReport",
    "GeneratorSpec",
    "GlobalPushOptimum",
    "IterationLimitError",
    "Mdp",
    "PeriodicSchedule",
    "PullPolicy",
    "PullSolveResult",
    "PushEquilibriumReport",
    "PushPolicy",
    "PushRoundReport",
    "PushSolveResult",
    "REWARD_ALPHAS",
    "SolveConfig",
    "SuiteInstance",
    "always_init_equilibrium",
    "anchor_beliefs",
    "augmented_chain",
    "build_counterexample",
    "canonical_objective",
    "chain_values",
    "closed_form_aoi",
    "closed_form_never",
    "closed_form_push",
    "communication_policy_iteration",
    "control_policy_iteration",
    "crossover_beta",
    "entry_value",
    "evaluate_joint_policy_exact",
    "evaluate_pull",
    "evaluate_push_anchors",
    "expected_path_return",
    "generate_suite",
    "global_push_optimum",
    "improve_control",
    "improve_periods",
    "is_push_equilibrium",
    "never_init_equilibrium",
    "pareto_dominates",
    "periodic_policy",
    "propagate_belief",
    "reachable_indices",
    "require_valid",
    "scheme_dominates",
    "sequence_probability",
    "silent_beliefs",
    "simulate",
    "solve_aoi_periodic",
    "solve_full_observability",
    "solve_pull",
    "solve_pull_path",
    "solve_push_api",
    "stationary_distribution",
    "validate_mdp",
    "value_bound",
    "value_update_sweep",
    "verify_counterexample",
]
