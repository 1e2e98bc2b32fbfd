"""Scheduled update baselines: the state-independent periodic (AoI) policy.

The age-of-information baseline requests an update every `period` steps no
matter which state was last observed. The control map is still optimized for
that fixed cadence (the baseline is a schedule, not a fixed controller), so
each candidate period costs one pinned-period pull solve.

`stationary_distribution` is re-exported here because scheduled policies are
where long-run occupancy questions usually come up; it lives with the
augmented-chain machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import stationary_distribution
from .mdp import ConfigurationError, Mdp, SolveConfig
from .policies import PeriodicSchedule, PullPolicy, periodic_policy
from .pull import solve_pull

__all__ = [
    "AoiSolveResult",
    "solve_aoi_periodic",
    "stationary_distribution",
]


@dataclass
class AoiSolveResult:
    schedule: PeriodicSchedule
    policy: PullPolicy
    values: np.ndarray
    objective: float
    per_period: list[tuple[int, float]]


def solve_aoi_periodic(
    m: Mdp, cfg: SolveConfig, period: int | None = None
) -> AoiSolveResult:
    """Best state-independent periodic update schedule, with its control map.

    Scans every period in [1, min(horizon_cap, t_max)] (periods past t_max
    are indistinguishable from t_max because the update there is forced),
    solves for the best control under each, scores by the exact net objective
    from the uniform just-updated start, and keeps the argmax, smallest period
    on ties. Pass `period` to skip the scan and solve one pinned cadence.
    `per_period` lists every (period, objective) pair examined so callers can
    re-check the argmax.
    """
    p_cap = min(cfg.horizon_cap, cfg.t_max)
    if period is not None:
        if not 1 <= period:
            raise ConfigurationError(f"period must be >= 1, got {period}")
        candidates = [min(period, p_cap)]
    else:
        candidates = list(range(1, p_cap + 1))

    per_period: list[tuple[int, float]] = []
    best: tuple[int, float, object] | None = None
    for p in candidates:
        pinned = np.full(m.num_states, p, dtype=int)
        res = solve_pull(m, cfg, pinned_periods=pinned)
        per_period.append((p, res.objective))
        if best is None or res.objective > best[1] + 1e-12:
            best = (p, res.objective, res)

    p, objective, res = best
    return AoiSolveResult(
        schedule=PeriodicSchedule(period=p),
        policy=periodic_policy(PeriodicSchedule(period=p), res.policy.control),
        values=res.values,
        objective=objective,
        per_period=per_period,
    )
