"""Generation-of-Threat indices from a fitted 12-dimensional model.

Dimensions 1-11 are pitch positions and dimension 12 is the threat state.
Positions are 1-based in every public function here.

* ``got_d(p) = K[12, p]``: threats directly generated by one touch at ``p``.
* ``got_i(p) = M[12, p]`` with ``M = K (I - K)^-1``: threats anywhere down
  the descendant tree of one touch.
* ``got_d90(p)``: expected touches of ``p`` in 90 processed minutes times ``got_d(p)``.
* ``got_i90(p)``: drop in expected threats over 90 processed minutes when
  row/column ``p`` of ``K`` and ``mu_p`` are zeroed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    BranchingMatrix,
    DescendantMatrix,
    HawkesModel,
    as_branching,
    branching_matrix,
    descendant_matrix,
    expected_counts,
    is_stable,
)
from .exceptions import InstabilityError, ValidationError

N_POSITIONS = 11
THREAT = 11  # 0-based index of the threat dimension
NINETY_MIN_S = 5400.0
CSV_COLUMNS = ("position", "got_d", "got_i", "got_d90", "got_i90", "touches_90")


def _check_position(K: BranchingMatrix, p: int) -> int:
    if K.d != N_POSITIONS + 1:
        raise ValidationError(f"GoT indices need a 12-dimensional model, got d={K.d}")
    if not 1 <= p <= N_POSITIONS:
        raise ValidationError(f"position must be in 1..{N_POSITIONS}, got {p}")
    return p - 1


def got_direct(K: BranchingMatrix, p: int) -> float:
    return float(K.K[THREAT, _check_position(K, p)])


def got_indirect(M: DescendantMatrix, p: int) -> float:
    if M.M.shape != (N_POSITIONS + 1, N_POSITIONS + 1):
        raise ValidationError("GoT indices need a 12x12 descendant matrix")
    if not 1 <= p <= N_POSITIONS:
        raise ValidationError(f"position must be in 1..{N_POSITIONS}, got {p}")
    return float(M.M[THREAT, p - 1])


def expected_touches_90(model: HawkesModel, K: BranchingMatrix) -> np.ndarray:
    return expected_counts(model, K, NINETY_MIN_S)


def got_direct_90(model: HawkesModel, K: BranchingMatrix, p: int) -> float:
    idx = _check_position(K, p)
    return float(expected_touches_90(model, K)[idx] * K.K[THREAT, idx])


def removal(model: HawkesModel, K: BranchingMatrix, p: int):
    """``(K^(-p), mu^(-p))``: position ``p`` removed from the pitch."""
    idx = _check_position(K, p)
    Kp = np.array(K.K)
    Kp[idx, :] = 0.0
    Kp[:, idx] = 0.0
    mup = np.array(model.mu)
    mup[idx] = 0.0
    return as_branching(Kp), mup


def got_indirect_90(model: HawkesModel, K: BranchingMatrix, p: int) -> float:
    """Expected threats lost over 90 processed minutes by removing position ``p``."""
    full = expected_counts(model, K, NINETY_MIN_S)[THREAT]
    Kp, mup = removal(model, K, p)
    if not is_stable(Kp):
        # cannot happen for nonnegative K (rho is monotone), kept as a runtime guard
        raise InstabilityError(f"reduced matrix for position {p} is unstable")
    reduced = np.linalg.solve(np.eye(Kp.d) - Kp.K, mup)[THREAT] * NINETY_MIN_S
    return float(full - reduced)


@dataclass(frozen=True)
class TeamAggregate:
    team: str
    got_d_sum: float


def team_aggregate(K: BranchingMatrix, team: str = "") -> TeamAggregate:
    """Sum of ``got_d`` over the eleven positions."""
    _check_position(K, 1)
    return TeamAggregate(team, float(np.sum(K.K[THREAT, :N_POSITIONS])))


@dataclass(frozen=True, eq=False)
class GotReport:
    """All four indices per position (arrays indexed by position - 1)."""

    got_d: np.ndarray
    got_i: np.ndarray
    got_d90: np.ndarray
    got_i90: np.ndarray
    expected_touches_90: np.ndarray
    edges: np.ndarray  # edges[a, b] = K[a, b]: touches of a+1 per touch of b+1
    threat_row: np.ndarray  # K[12, :], length 12
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "meta": dict(self.meta),
            "got_d": self.got_d.tolist(),
            "got_i": self.got_i.tolist(),
            "got_d90": self.got_d90.tolist(),
            "got_i90": self.got_i90.tolist(),
            "expected_touches_90": self.expected_touches_90.tolist(),
            "edges": self.edges.tolist(),
            "threat_row": self.threat_row.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GotReport":
        arr = {k: np.asarray(data[k], dtype=float) for k in
               ("got_d", "got_i", "got_d90", "got_i90", "expected_touches_90",
                "edges", "threat_row")}
        return cls(**arr, meta=dict(data.get("meta", {})))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), allow_nan=False, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, path) -> "GotReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k in range(N_POSITIONS):
            w.writerow([k + 1, repr(float(self.got_d[k])), repr(float(self.got_i[k])),
                        repr(float(self.got_d90[k])), repr(float(self.got_i90[k])),
                        repr(float(self.expected_touches_90[k]))])
        return buf.getvalue()

    def to_table(self) -> str:
        """Display rounding: two decimals per touch, one per 90 minutes."""
        lines = [f"{'Pos':>3} {'GoT^d':>6} {'GoT^i':>6} {'GoT^d_90':>9} {'GoT^i_90':>9} {'Touches_90':>11}"]
        order = np.argsort(-self.got_i90, kind="stable")
        for k in order:
            lines.append(f"{k + 1:>3} {self.got_d[k]:>6.2f} {self.got_i[k]:>6.2f} "
                         f"{self.got_d90[k]:>9.1f} {self.got_i90[k]:>9.1f} "
                         f"{self.expected_touches_90[k]:>11.1f}")
        return "\n".join(lines)


def got_report(model: HawkesModel, meta: dict | None = None) -> GotReport:
    K = branching_matrix(model)
    _check_position(K, 1)
    M = descendant_matrix(K)
    touches = expected_touches_90(model, K)[:N_POSITIONS]
    positions = range(1, N_POSITIONS + 1)
    got_d = np.array([got_direct(K, p) for p in positions])
    got_i = np.array([got_indirect(M, p) for p in positions])
    got_i90 = np.array([got_indirect_90(model, K, p) for p in positions])
    return GotReport(
        got_d=got_d,
        got_i=got_i,
        got_d90=touches * got_d,
        got_i90=got_i90,
        expected_touches_90=touches,
        edges=np.array(K.K[:N_POSITIONS, :N_POSITIONS]),
        threat_row=np.array(K.K[THREAT, :]),
        meta=dict(meta or {}),
    )
