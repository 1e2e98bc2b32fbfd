"""Problem instance generator for the benchmark suites.

Instances share one seeded deterministic skeleton (every action maps each
state to a single uniformly drawn successor) that is then smeared to a chosen
density: the one-hot row becomes a triangular bump of odd width centered on
the original successor, clipped at the state-space edge and renormalized.
Width 1 is the skeleton itself; widths 3, 5, ... interpolate toward diffuse
dynamics while keeping the skeleton recoverable as the mode.

Rewards depend only on the arrival state: exp(-alpha |s' - s0|) around a goal
state s0. A large alpha ("focused") pays essentially only at the goal, so
knowing the state matters; a small alpha ("spread") pays nearly everywhere,
so updates buy little. The suite crosses both reward styles with a ladder of
densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import ConfigurationError, Mdp

REWARD_ALPHAS = {"focused": 10.0, "spread": 0.01}


@dataclass(frozen=True)
class GeneratorSpec:
    """Suite parameters. `num_densities` odd widths 1, 3, ... are generated
    for each reward style; `goal_state` defaults to the middle state."""

    num_states: int = 10
    num_actions: int = 2
    num_densities: int = 5
    seed: int = 0
    gamma: float = 0.95
    goal_state: int | None = None
    reward_styles: tuple[str, ...] = ("focused", "spread")

    def __post_init__(self):
        if self.num_states < 2 or self.num_actions < 1 or self.num_densities < 1:
            raise ConfigurationError("suite dimensions must be positive")
        for style in self.reward_styles:
            if style not in REWARD_ALPHAS:
                raise ConfigurationError(f"unknown reward style {style!r}")
        goal = self.resolved_goal
        if not 0 <= goal < self.num_states:
            raise ConfigurationError("goal state out of range")

    @property
    def resolved_goal(self) -> int:
        return self.num_states // 2 if self.goal_state is None else self.goal_state

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(2 * i + 1 for i in range(self.num_densities))


def make_reward_kernel(num_states: int, alpha: float, goal_state: int) -> np.ndarray:
    """Arrival-state reward profile exp(-alpha |s' - goal|), shape (S,);
    callers broadcast it over actions and source states."""
    distance = np.abs(np.arange(num_states) - goal_state)
    return np.exp(-alpha * distance)


def make_base_deterministic(
    num_states: int, num_actions: int, rng: np.random.Generator
) -> np.ndarray:
    """Deterministic skeleton: targets[a, s] drawn uniformly over states."""
    return rng.integers(0, num_states, size=(num_actions, num_states))


def triangular_weights(width: int) -> np.ndarray:
    """Unnormalized triangular bump over offsets -h..h for width 2h+1.

    The raw profile is 4 (width - 2|d|) / (width + 1)^2 at offset distance d;
    it is renormalized after clipping, so interior rows of width 3 come out
    as (0.2, 0.6, 0.2).
    """
    if width < 1 or width % 2 == 0:
        raise ConfigurationError("width must be odd and positive")
    half = width // 2
    d = np.abs(np.arange(-half, half + 1))
    return 4.0 * (width - 2.0 * d) / (width + 1.0) ** 2


def densify(targets: np.ndarray, num_states: int, width: int) -> np.ndarray:
    """Smear a deterministic skeleton into width-`width` triangular rows.

    Probability that would fall outside [0, num_states) is clipped off and
    the row renormalized, so edge rows lean inward but stay stochastic.
    """
    num_actions = targets.shape[0]
    weights = triangular_weights(width)
    half = width // 2
    trans = np.zeros((num_actions, num_states, num_states))
    for a in range(num_actions):
        for s in range(num_states):
            center = int(targets[a, s])
            for offset, wgt in zip(range(-half, half + 1), weights):
                dest = center + offset
                if 0 <= dest < num_states:
                    trans[a, s, dest] += wgt
            trans[a, s] /= trans[a, s].sum()
    return trans


def make_instance(spec: GeneratorSpec, style: str, width: int) -> Mdp:
    """One suite member; the skeleton depends only on the seed, so instances
    across styles and widths share it."""
    rng = np.random.default_rng(spec.seed)
    targets = make_base_deterministic(spec.num_states, spec.num_actions, rng)
    transitions = densify(targets, spec.num_states, width)
    kernel = make_reward_kernel(spec.num_states, REWARD_ALPHAS[style], spec.resolved_goal)
    rewards = np.tile(
        kernel[None, None, :], (spec.num_actions, spec.num_states, 1)
    )
    return Mdp(transitions=transitions, rewards=rewards, gamma=spec.gamma)


@dataclass(frozen=True)
class SuiteInstance:
    name: str
    style: str
    width: int
    mdp: Mdp = field(compare=False)


def generate_suite(spec: GeneratorSpec) -> list[SuiteInstance]:
    """Every (reward style, density) cross, deterministically from the seed."""
    out = []
    for style in spec.reward_styles:
        for width in spec.widths:
            out.append(
                SuiteInstance(
                    name=f"{style}-w{width}",
                    style=style,
                    width=width,
                    mdp=make_instance(spec, style, width),
                )
            )
    return out
