"""Shared fixtures plus the acceptance-criteria summary reporter."""

from __future__ import annotations

import numpy as np
import pytest

from ccmdp import GeneratorSpec, Mdp, build_counterexample, generate_suite

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_mdp(
    seed: int, num_states: int = 4, num_actions: int = 2, gamma: float = 0.9
) -> Mdp:
    """Dense random instance: Dirichlet rows, uniform [0, 1) transition rewards."""
    rng = np.random.default_rng(seed)
    transitions = rng.dirichlet(np.ones(num_states), size=(num_actions, num_states))
    rewards = rng.uniform(0.0, 1.0, size=(num_actions, num_states, num_states))
    return Mdp(transitions=transitions, rewards=rewards, gamma=gamma)


@pytest.fixture(scope="session")
def desk_suite():
    return generate_suite(GeneratorSpec())


@pytest.fixture
def ce():
    return build_counterexample(0.9)


@pytest.fixture(scope="session")
def full_verdict():
    """One full default verification of the 5-state instance, shared by the
    unit tests and the acceptance gate (it takes about two minutes). The
    wall time is attached because the gate also bounds it."""
    import time

    from ccmdp import verify_counterexample

    start = time.monotonic()
    verdict = verify_counterexample()
    verdict.elapsed_seconds = time.monotonic() - start
    return verdict
