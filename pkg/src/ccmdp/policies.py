"""Joint control + communication policy containers.

All policies share one step protocol used by the evaluators and the simulator:
``action(s, k)`` is the control input while the last observed state is ``s``
and ``k`` steps have elapsed, and ``update_due(s, k_new, current)`` decides
whether an update is delivered at the instant the elapsed counter reaches
``k_new`` with the chain in ``current``. Every rule is forced to update once
``k_new`` reaches ``t_max``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import ConfigurationError


def _as_control(control: np.ndarray) -> np.ndarray:
    c = np.asarray(control, dtype=int)
    if c.ndim != 2:
        raise ConfigurationError(f"control map must be 2-d (S, t_max+1), got {c.shape}")
    return c


@dataclass
class PullPolicy:
    """Control map plus per-state update periods (the controller requests updates).

    control[s, k] is the action at information state (s, k); entries at
    k >= periods[s] exist (the accessor clamps k to the last column) but are
    never exercised by exact evaluation. periods[s] >= 1; evaluation forces an
    update at the cap, so the effective period is min(periods[s], t_max).
    """

    control: np.ndarray
    periods: np.ndarray

    def __post_init__(self):
        self.control = _as_control(self.control)
        self.periods = np.asarray(self.periods, dtype=int)
        if self.periods.shape != (self.control.shape[0],):
            raise ConfigurationError("periods must have one entry per state")
        if np.any(self.periods < 1):
            raise ConfigurationError("periods must all be >= 1")

    @property
    def num_states(self) -> int:
        return self.control.shape[0]

    @property
    def t_max(self) -> int:
        return self.control.shape[1] - 1

    def action(self, s: int, k: int) -> int:
        return int(self.control[s, min(k, self.t_max)])

    def update_due(self, s: int, k_new: int, current: int | None = None) -> bool:
        return k_new >= min(int(self.periods[s]), self.t_max)

    def to_json_dict(self) -> dict:
        return {"control": self.control.tolist(), "periods": self.periods.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PullPolicy":
        return cls(control=np.asarray(d["control"]), periods=np.asarray(d["periods"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PullPolicy":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass
class PushPolicy:
    """Control map plus a transmit map (the observer decides when to update).

    transmit[s, k, s'] in {0, 1}: deliver an update when the elapsed counter
    reaches k, the last observed state is s and the chain sits in s'.
    Construction normalizes the forced entries: transmit[:, t_max, :] = 1 (cap)
    and transmit[:, 0, :] = 0 (an update resets elapsed to 0; the rule is next
    consulted at k = 1, so no self-update loop exists).
    """

    control: np.ndarray
    transmit: np.ndarray

    def __post_init__(self):
        self.control = _as_control(self.control)
        t = np.asarray(self.transmit)
        if t.ndim != 3 or t.shape[0] != t.shape[2] or t.shape[0] != self.control.shape[0]:
            raise ConfigurationError(
                f"transmit map must have shape (S, t_max+1, S), got {t.shape}"
            )
        if t.shape[1] != self.control.shape[1]:
            raise ConfigurationError("transmit and control disagree on t_max")
        if not np.isin(t, (0, 1)).all():
            raise ConfigurationError("transmit entries must be 0 or 1")
        t = t.astype(np.uint8)
        t[:, -1, :] = 1
        t[:, 0, :] = 0
        self.transmit = t

    @property
    def num_states(self) -> int:
        return self.control.shape[0]

    @property
    def t_max(self) -> int:
        return self.control.shape[1] - 1

    def action(self, s: int, k: int) -> int:
        return int(self.control[s, min(k, self.t_max)])

    def update_due(self, s: int, k_new: int, current: int) -> bool:
        if k_new >= self.t_max:
            return True
        return bool(self.transmit[s, k_new, current])

    def to_json_dict(self) -> dict:
        return {"control": self.control.tolist(), "transmit": self.transmit.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PushPolicy":
        return cls(control=np.asarray(d["control"]), transmit=np.asarray(d["transmit"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PushPolicy":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PeriodicSchedule:
    """State-independent update schedule: update every `period` steps.

    phase shifts the first update of a rollout (a rollout started at t = 0
    sees updates at phase, phase + period, ...; phase = 0 means the start
    itself counts as the anchor update). Steady-state metrics do not depend on
    the phase; it exists so schedules like "update at every odd step" can be
    stated and simulated exactly.
    """

    period: int
    phase: int = 0

    def __post_init__(self):
        if self.period < 1:
            raise ConfigurationError(f"period must be >= 1, got {self.period}")
        if not 0 <= self.phase < self.period:
            raise ConfigurationError("phase must lie in [0, period)")


def periodic_policy(schedule: PeriodicSchedule, control: np.ndarray) -> PullPolicy:
    """Bind a periodic schedule to a control map as a constant-period PullPolicy."""
    control = _as_control(control)
    periods = np.full(control.shape[0], schedule.period, dtype=int)
    return PullPolicy(control=control, periods=periods)
