"""Multivariate event trajectories and their JSON wire format.

Dimensions are 0-based in memory (``marks``) and 1-based on disk, matching
``{"d": int, "horizon_s": float, "events": [[t, dim], ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatch, ValidationError

DEAD_GAP_S = 60.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    d: int
    times: np.ndarray
    marks: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        marks = np.array(self.marks, dtype=np.int64).reshape(-1)
        times.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "horizon", float(self.horizon))
        check_trajectory(self)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.d == other.d
            and self.horizon == other.horizon
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.marks, other.marks)
        )

    def counts(self) -> np.ndarray:
        return np.bincount(self.marks, minlength=self.d)

    def dimension(self, i: int) -> np.ndarray:
        """Event times of dimension ``i`` (0-based)."""
        return self.times[self.marks == i]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "horizon_s": self.horizon,
            "events": [[float(t), int(m) + 1] for t, m in zip(self.times, self.marks)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        events = data.get("events", [])
        if events:
            arr = np.asarray(events, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValidationError("events must be a list of [t, dim] pairs")
            dims = arr[:, 1]
            if np.any(dims != np.round(dims)):
                raise ValidationError("event dims must be integers")
            times, marks = arr[:, 0], dims.astype(np.int64) - 1
        else:
            times, marks = np.empty(0), np.empty(0, dtype=np.int64)
        return cls(int(data["d"]), times, marks, float(data["horizon_s"]))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), allow_nan=False)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, path) -> "Trajectory":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def check_trajectory(traj: Trajectory) -> Trajectory:
    """Validate the invariants every consumer relies on; return ``traj``."""
    if traj.d < 1:
        raise ValidationError("d must be at least 1")
    if not np.isfinite(traj.horizon) or traj.horizon <= 0:
        raise ValidationError("horizon must be positive and finite")
    t, m = traj.times, traj.marks
    if t.shape != m.shape:
        raise ValidationError("times and marks must have equal length")
    if t.size:
        if not np.all(np.isfinite(t)):
            raise ValidationError("event times must be finite")
        if t[0] <= 0 or t[-1] > traj.horizon:
            raise ValidationError("event times must lie in (0, horizon]")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("event times must be strictly increasing")
        if m.min() < 0 or m.max() >= traj.d:
            raise ValidationError(f"event dims must be in 1..{traj.d}")
    return traj


def check_model_matches(model, traj: Trajectory):
    if model.d != traj.d:
        raise DimensionMismatch(f"model has d={model.d}, trajectory has d={traj.d}")


def concatenate(trajectories, gap: float = DEAD_GAP_S) -> Trajectory:
    """Join trajectories into one long record separated by dead gaps.

    Each trajectory is shifted to start ``gap`` seconds after the previous
    cumulative horizon, so cross-record excitation decays by at least
    ``exp(-beta * gap)``.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ValidationError("cannot concatenate an empty list of trajectories")
    d = trajectories[0].d
    times, marks = [], []
    offset = 0.0
    for k, tr in enumerate(trajectories):
        if tr.d != d:
            raise DimensionMismatch(f"trajectory {k} has d={tr.d}, expected {d}")
        if k:
            offset += gap
        times.append(tr.times + offset)
        marks.append(tr.marks)
        offset += tr.horizon
    return Trajectory(d, np.concatenate(times), np.concatenate(marks), offset)
