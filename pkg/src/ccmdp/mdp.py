"""Finite discounted MDPs: model container, validation, serialization, and the
full-observability reference solver.

Conventions used across the package:

* transition tensors are indexed ``transitions[a, s, s']`` and every row
  ``transitions[a, s, :]`` is a probability distribution;
* rewards are paid on transitions, ``rewards[a, s, s']``;
* beliefs are row vectors, propagated as ``b @ transitions[a]``;
* the elapsed-time index ``k`` (steps since the controller last observed the
  state) is capped at ``t_max``: control maps clamp to their last column and
  every communication rule is forced to deliver an update once ``k`` reaches
  ``t_max``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROW_SUM_TOL = 1e-12


class ConfigurationError(ValueError):
    """A model, policy, or solver configuration violates a structural requirement."""


class IterationLimitError(RuntimeError):
    """An iterative solve failed to converge within its iteration cap."""


@dataclass(frozen=True)
class Mdp:
    """Finite discounted MDP with transition-attached rewards.

    Args:
        transitions: array of shape (num_actions, num_states, num_states);
            ``transitions[a, s, s']`` is the probability of landing in ``s'``
            after taking action ``a`` in state ``s``.
        rewards: array of the same shape; ``rewards[a, s, s']`` is paid when
            that transition happens.
        gamma: discount factor in [0, 1).
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=float)
        r = np.asarray(self.rewards, dtype=float)
        if t.ndim != 3 or t.shape[1] != t.shape[2]:
            raise ConfigurationError(
                f"transitions must have shape (A, S, S), got {t.shape}"
            )
        if r.shape != t.shape:
            raise ConfigurationError(
                f"rewards shape {r.shape} does not match transitions shape {t.shape}"
            )
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")
        t = t.copy()
        r = r.copy()
        t.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "rewards", r)

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    def expected_rewards(self) -> np.ndarray:
        """Per-(action, state) expected one-step reward, sum_s' P * r."""
        return np.einsum("ast,ast->as", self.transitions, self.rewards)

    def to_json_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "gamma": self.gamma,
            "transitions": self.transitions.tolist(),
            "rewards": self.rewards.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Mdp":
        m = cls(
            transitions=np.asarray(d["transitions"], dtype=float),
            rewards=np.asarray(d["rewards"], dtype=float),
            gamma=float(d["gamma"]),
        )
        if m.num_states != d["num_states"] or m.num_actions != d["num_actions"]:
            raise ConfigurationError("declared sizes do not match tensor shapes")
        return m

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Mdp":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SolveConfig:
    """Knobs shared by every solver in the package.

    beta is the cost charged per delivered state update; t_max caps the
    elapsed-time index; horizon_cap bounds the update-period search;
    tolerance is the max-norm convergence threshold for value sweeps and the
    objective-improvement fallback; max_iterations is a safety cap for every
    iterative loop.
    """

    beta: float = 0.0
    t_max: int = 30
    horizon_cap: int = 30
    tolerance: float = 1e-10
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}")
        if self.t_max < 1:
            raise ConfigurationError(f"t_max must be >= 1, got {self.t_max}")
        if self.horizon_cap < 1:
            raise ConfigurationError(f"horizon_cap must be >= 1, got {self.horizon_cap}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")


@dataclass(frozen=True)
class AugmentedState:
    """Controller-side information state: last observed state and elapsed steps."""

    last_observed: int
    elapsed: int

    def check(self, num_states: int, t_max: int) -> None:
        if not 0 <= self.last_observed < num_states:
            raise ConfigurationError(f"last_observed {self.last_observed} out of range")
        if not 0 <= self.elapsed <= t_max:
            raise ConfigurationError(f"elapsed {self.elapsed} exceeds t_max {t_max}")


def validate_mdp(m: Mdp) -> list[str]:
    """Return a list of human-readable invariant violations (empty iff valid).

    Shape consistency and the gamma range are enforced at construction; this
    checks the probabilistic invariants and names offending indices.
    """
    violations: list[str] = []
    t = m.transitions
    if not np.all(np.isfinite(t)):
        for a, s, s2 in zip(*np.nonzero(~np.isfinite(t))):
            violations.append(f"transitions[{a},{s},{s2}] is not finite")
        return violations
    if not np.all(np.isfinite(m.rewards)):
        for a, s, s2 in zip(*np.nonzero(~np.isfinite(m.rewards))):
            violations.append(f"rewards[{a},{s},{s2}] is not finite")
    neg = t < 0
    for a, s, s2 in zip(*np.nonzero(neg)):
        violations.append(f"transitions[{a},{s},{s2}] = {t[a, s, s2]} is negative")
    row_sums = t.sum(axis=2)
    bad = np.abs(row_sums - 1.0) > ROW_SUM_TOL
    for a, s in zip(*np.nonzero(bad)):
        violations.append(
            f"transitions[{a},{s},:] sums to {row_sums[a, s]!r}, expected 1 within {ROW_SUM_TOL}"
        )
    return violations


def require_valid(m: Mdp) -> None:
    violations = validate_mdp(m)
    if violations:
        raise ConfigurationError("; ".join(violations))


def solve_full_observability(
    m: Mdp, cfg: SolveConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal values and policy when the controller sees the state every step.

    Plain policy iteration: exact evaluation by a dense linear solve, greedy
    improvement with ties resolved to the lowest action index. Returns
    ``(values, policy)``; values satisfy the Bellman optimality equation within
    cfg.tolerance.
    """
    cfg = cfg or SolveConfig()
    require_valid(m)
    n, gamma = m.num_states, m.gamma
    er = m.expected_rewards()  # (A, S)
    policy = np.zeros(n, dtype=int)
    eye = np.eye(n)
    for _ in range(cfg.max_iterations):
        p_pi = m.transitions[policy, np.arange(n)]  # (S, S)
        r_pi = er[policy, np.arange(n)]
        values = np.linalg.solve(eye - gamma * p_pi, r_pi)
        q = er + gamma * m.transitions @ values  # (A, S)
        new_policy = np.argmax(q, axis=0)  # argmax ties -> lowest index
        if np.array_equal(new_policy, policy):
            residual = np.max(np.abs(q.max(axis=0) - values))
            if residual > cfg.tolerance:
                raise IterationLimitError(
                    f"policy iteration fixed point has Bellman residual {residual}"
                )
            return values, policy
        policy = new_policy
    raise IterationLimitError(
        f"policy iteration did not converge within {cfg.max_iterations} iterations"
    )


def value_bound(m: Mdp, cfg: SolveConfig) -> float:
    """Sound magnitude bound for any information-state value.

    Each step pays at most max|r| in reward and at most one communication
    charge of beta, so every discounted value (net or not, any elapsed
    counter) lies within (max|r| + beta) / (1 - gamma).
    """
    return (float(np.max(np.abs(m.rewards))) + cfg.beta) / (1.0 - m.gamma)
