"""Belief propagation and blind-path return evaluation.

While the controller runs open loop between updates, its belief over the
current state is the last observed point mass pushed through the transition
matrices of the actions it has taken. Beliefs are row vectors; propagation is
``b @ transitions[a]``, applied left to right in the order the actions were
taken.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .mdp import ConfigurationError, Mdp


def _control_row_action(control: np.ndarray, s: int, k: int) -> int:
    # clamp elapsed index to the last column, mirroring the policy accessor
    return int(control[s, min(k, control.shape[1] - 1)])


def propagate_belief(m: Mdp, start: int, actions: Sequence[int]) -> np.ndarray:
    """Belief over the current state after taking `actions` from known state `start`."""
    if not 0 <= start < m.num_states:
        raise ConfigurationError(f"start state {start} out of range")
    b = np.zeros(m.num_states)
    b[start] = 1.0
    for a in actions:
        b = b @ m.transitions[a]
    return b


def anchor_beliefs(m: Mdp, control: np.ndarray, t_max: int) -> np.ndarray:
    """theta[s, k, :]: belief after k blind steps of `control` from anchor s."""
    n = m.num_states
    theta = np.zeros((n, t_max + 1, n))
    for s in range(n):
        b = np.zeros(n)
        b[s] = 1.0
        theta[s, 0] = b
        for k in range(t_max):
            b = b @ m.transitions[_control_row_action(control, s, k)]
            theta[s, k + 1] = b
    return theta


def sequence_probability(
    m: Mdp, control: np.ndarray, anchor: int, offset: int, sequence: Sequence[int]
) -> float:
    """Probability of observing `sequence` of states starting at elapsed `offset`.

    sequence[0] is the state at elapsed time `offset` after the controller last
    observed `anchor`; subsequent entries follow under the anchor's control row.
    """
    if len(sequence) == 0:
        raise ConfigurationError("sequence must be nonempty")
    if offset < 0:
        raise ConfigurationError("offset must be >= 0")
    b = propagate_belief(
        m, anchor, [_control_row_action(control, anchor, j) for j in range(offset)]
    )
    p = b[sequence[0]]
    for i in range(len(sequence) - 1):
        a = _control_row_action(control, anchor, offset + i)
        p = p * m.transitions[a, sequence[i], sequence[i + 1]]
    return float(p)


def expected_path_return(
    m: Mdp,
    control: np.ndarray,
    anchor: int,
    offset: int,
    length: int,
    terminal_value: np.ndarray,
    beta: float,
    first_action: int | None = None,
) -> float:
    """Expected discounted return of a blind path ending in an update.

    From information state (anchor, offset), exactly `length` further steps are
    taken under the anchor's control row (optionally overriding the first step
    with `first_action`); the step at offset j earns the expected transition
    reward discounted by gamma**(j - offset); after the last step the update is
    delivered, adding gamma**length * (terminal_value[s_end] - beta).

    Runs as a forward sweep over beliefs, O(length * S^2); equals the explicit
    sum over all state sequences of length `length`.
    """
    if length < 1:
        raise ConfigurationError("length must be >= 1")
    terminal_value = np.asarray(terminal_value, dtype=float)
    b = propagate_belief(
        m, anchor, [_control_row_action(control, anchor, j) for j in range(offset)]
    )
    er = m.expected_rewards()
    total = 0.0
    disc = 1.0
    for j in range(length):
        if j == 0 and first_action is not None:
            a = int(first_action)
        else:
            a = _control_row_action(control, anchor, offset + j)
        total += disc * float(b @ er[a])
        b = b @ m.transitions[a]
        disc *= m.gamma
    total += disc * float(b @ (terminal_value - beta))
    return total
