"""Football event logs to 12-dimensional point processes.

One match of one team becomes a :class:`~gothawkes.trajectory.Trajectory`
with ``d = 12``: dimensions 1-11 hold the touches of each position and
dimension 12 the entries into the opponent's danger area.  The output clock
is compressed: time spent in a threat state or in opponent possession is cut
out, and each opponent possession is replaced by a random gap.

Event coordinates are fractions of the pitch in the frame of the team
performing the event (that team attacks towards ``x = 1``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import MissingLineup, UnknownFormation, UnorderedEvents, ValidationError
from .trajectory import Trajectory

D = 12
THREAT_DIM = 11  # 0-based
MIN_SEPARATION_S = 1e-3
GAP_MEAN_S = 6.0  # each of the two exponential terms
MIN_GAME_MINUTES = 45.0

FORMATION_CLUSTERS = {
    1: ("433", "4141", "4231", "4321"),
    2: ("442", "41212", "451", "4411", "4222"),
    3: ("532", "352", "31312", "3511", "3412"),
    4: ("343", "541", "3421"),
}
_CLUSTER_OF = {f: c for c, fs in FORMATION_CLUSTERS.items() for f in fs}

KINDS = ("touch", "cross", "out_of_play")
SET_PIECES = ("none", "corner", "free_kick")


def classify_formation(formation: str) -> int:
    """Cluster (1-4) of a formation string such as ``"4231"``."""
    key = str(formation).replace("-", "").strip()
    try:
        return _CLUSTER_OF[key]
    except KeyError:
        raise UnknownFormation(f"formation {formation!r} is not in any cluster") from None


@dataclass(frozen=True)
class DangerArea:
    width_fraction: float = 0.5
    length_fraction: float = 0.25
    exit_hysteresis_m: float = 2.0
    pitch_length_m: float = 105.0
    pitch_width_m: float = 68.0

    @property
    def x_min(self) -> float:
        return 1.0 - self.length_fraction

    @property
    def half_width(self) -> float:
        return 0.5 * self.width_fraction

    def outside_exit_band(self, x: float, y: float) -> bool:
        """True once the ball is at least ``exit_hysteresis_m`` outside the area."""
        dx = self.exit_hysteresis_m / self.pitch_length_m
        dy = self.exit_hysteresis_m / self.pitch_width_m
        return x < self.x_min - dx or abs(y - 0.5) > self.half_width + dy


def in_danger_area(x: float, y: float, area: DangerArea = DangerArea()) -> bool:
    return x >= area.x_min and abs(y - 0.5) <= area.half_width


@dataclass(frozen=True)
class RawEvent:
    match_id: str
    team: str
    position: int | None
    player_id: str
    kind: str
    set_piece: str
    t: float
    x: float
    y: float

    def __post_init__(self):
        if self.team not in ("home", "away"):
            raise ValidationError(f"team must be 'home' or 'away', got {self.team!r}")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown event kind {self.kind!r}")
        if self.set_piece not in SET_PIECES:
            raise ValidationError(f"unknown set_piece {self.set_piece!r}")
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValidationError(f"coordinates out of [0, 1]: ({self.x}, {self.y})")
        if self.position is not None and not 1 <= self.position <= 11:
            raise ValidationError(f"position must be in 1..11, got {self.position}")

    @classmethod
    def from_dict(cls, data: dict) -> "RawEvent":
        pos = data.get("position")
        return cls(
            match_id=str(data["match_id"]),
            team=data["team"],
            position=None if pos is None else int(pos),
            player_id=str(data.get("player_id") or ""),
            kind=data.get("kind", "touch"),
            set_piece=data.get("set_piece") or "none",
            t=float(data["t"]),
            x=float(data["x"]),
            y=float(data["y"]),
        )

    def to_dict(self) -> dict:
        return {
            "match_id": self.match_id, "team": self.team, "position": self.position,
            "player_id": self.player_id, "kind": self.kind, "set_piece": self.set_piece,
            "t": self.t, "x": self.x, "y": self.y,
        }


@dataclass(frozen=True)
class MatchMeta:
    """Context for the team being analysed in one match.

    ``lineup`` maps positions 1-11 to starting player ids;
    ``minutes_played`` optionally overrides per-player minutes (starters
    default to the full ``duration_s``).
    """

    match_id: str
    formation: str
    team: str = "home"
    lineup: dict = field(default_factory=dict)
    substitution_times: tuple = ()
    analyzed_until: float | None = None
    duration_s: float = 5400.0
    cluster: int | None = None
    minutes_played: dict = field(default_factory=dict)

    def __post_init__(self):
        cluster = classify_formation(self.formation)
        if self.cluster is not None and int(self.cluster) != cluster:
            raise ValidationError(
                f"match {self.match_id}: formation {self.formation} is cluster {cluster}, "
                f"not {self.cluster}"
            )
        object.__setattr__(self, "cluster", cluster)
        object.__setattr__(self, "lineup", {int(k): str(v) for k, v in self.lineup.items()})
        object.__setattr__(self, "substitution_times",
                           tuple(sorted(float(s) for s in self.substitution_times)))
        if self.team not in ("home", "away"):
            raise ValidationError(f"team must be 'home' or 'away', got {self.team!r}")
        until = self.duration_s if self.analyzed_until is None else float(self.analyzed_until)
        if until > self.duration_s:
            raise ValidationError("analyzed_until exceeds the match duration")
        object.__setattr__(self, "analyzed_until", until)

    @classmethod
    def from_dict(cls, data: dict) -> "MatchMeta":
        return cls(
            match_id=str(data["match_id"]),
            formation=str(data["formation"]),
            team=data.get("team", "home"),
            lineup=data.get("lineup", {}),
            substitution_times=tuple(data.get("substitution_times", ())),
            analyzed_until=data.get("analyzed_until"),
            duration_s=float(data.get("duration_s", 5400.0)),
            cluster=data.get("cluster"),
            minutes_played={str(k): float(v) for k, v in data.get("minutes_played", {}).items()},
        )

    def to_dict(self) -> dict:
        return {
            "match_id": self.match_id, "formation": self.formation, "team": self.team,
            "cluster": self.cluster, "lineup": {str(k): v for k, v in self.lineup.items()},
            "substitution_times": list(self.substitution_times),
            "analyzed_until": self.analyzed_until, "duration_s": self.duration_s,
            "minutes_played": dict(self.minutes_played),
        }

    def first_substitution(self) -> float:
        return self.substitution_times[0] if self.substitution_times else self.duration_s


def read_events(path) -> list:
    """Read a JSON Lines file of raw events (blank lines ignored)."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(RawEvent.from_dict(json.loads(line)))
    return events


def read_metas(path) -> list:
    """Read match metadata: one JSON object or a list of them."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = [data]
    return [MatchMeta.from_dict(m) for m in data]


def build_point_process(events, meta: MatchMeta, area: DangerArea = DangerArea(),
                        seed: int = 0) -> Trajectory:
    """Apply the five construction rules to one match of ``meta.team``.

    1. A team touch at position ``p`` is a jump in dimension ``p``.
    2. A team touch inside the danger area is a jump in dimension 12 only.
    3. After a threat, nothing is recorded (clock included) until the ball is
       outside the area by the hysteresis margin.
    4. Opponent possession is cut from the clock; on regaining the ball a gap
       of two exponential draws (mean 6 s each) is inserted.
    5. Crosses from corners or free kicks are discarded.

    Events after ``meta.analyzed_until`` are ignored.  Timestamps that would
    not strictly increase are pushed 1 ms past their predecessor.
    """
    rng = np.random.default_rng(seed)
    team = meta.team
    times, marks = [], []
    last_t = 0.0
    prev_raw = None

    clock = 0.0  # compressed clock at the anchor
    anchor = 0.0  # raw time at which the clock last (re)started
    running = True
    in_threat = False
    possession = True

    def now(raw):
        return clock + (raw - anchor) if running else clock

    def stop(raw):
        nonlocal clock, running
        if running:
            clock = now(raw)
            running = False

    def emit(t, dim):
        nonlocal last_t
        t = round(t, 6)
        if t <= last_t:
            t = round(last_t + MIN_SEPARATION_S, 6)
        times.append(t)
        marks.append(dim)
        last_t = t

    for ev in events:
        if ev.match_id != meta.match_id:
            continue
        if prev_raw is not None and ev.t < prev_raw:
            raise UnorderedEvents(f"match {meta.match_id}: event at t={ev.t} after t={prev_raw}")
        prev_raw = ev.t
        if ev.t > meta.analyzed_until:
            break
        if ev.kind == "cross" and ev.set_piece in ("corner", "free_kick"):
            continue  # rule 5
        own = ev.team == team
        x, y = (ev.x, ev.y) if own else (1.0 - ev.x, 1.0 - ev.y)

        if in_threat:
            if not area.outside_exit_band(x, y):
                if not own and ev.kind != "out_of_play":
                    possession = False
                continue
            in_threat = False  # rule 3: ball is clear, resume on this event
            if possession:
                running = True
                anchor = ev.t

        if ev.kind == "out_of_play":
            continue
        if not own:
            if possession:
                stop(ev.t)
                possession = False
            continue

        if ev.position is None:
            raise MissingLineup(f"match {meta.match_id}: team touch at t={ev.t} has no position")
        if not possession:
            # rule 4: regained the ball, insert the compressed opponent spell
            stop(ev.t)
            clock += rng.exponential(GAP_MEAN_S) + rng.exponential(GAP_MEAN_S)
            running = True
            anchor = ev.t
            possession = True
        if in_danger_area(x, y, area):
            emit(now(ev.t), THREAT_DIM)
            stop(ev.t)
            in_threat = True
        else:
            emit(now(ev.t), ev.position - 1)

    horizon = now(meta.analyzed_until) if not in_threat else clock
    horizon = max(round(horizon, 6), last_t, MIN_SEPARATION_S)
    return Trajectory(D, np.array(times), np.array(marks, dtype=np.int64), horizon)


def select_games(matches, team_cluster: int, required_positions: dict | None = None,
                 fixed_eleven: bool = False) -> list:
    """Matches usable for one analysis, with ``analyzed_until`` set.

    Keeps matches in ``team_cluster`` whose starting lineup satisfies every
    ``position -> player_id`` constraint (``None`` or ``"any"`` accepts any
    player).  With ``fixed_eleven`` or any player constraint the record stops
    at the team's first substitution; otherwise full time is used.
    """
    required = {int(k): v for k, v in (required_positions or {}).items()}
    constrained = any(v not in (None, "any") for v in required.values())
    out = []
    for meta in matches:
        if meta.cluster != team_cluster:
            continue
        if any(v not in (None, "any") and meta.lineup.get(p) != v for p, v in required.items()):
            continue
        until = meta.first_substitution() if (fixed_eleven or constrained) else meta.duration_s
        out.append(replace(meta, analyzed_until=until))
    return out


def playing_minutes(matches, player_id: str) -> float:
    """Minutes of ``player_id`` over ``matches``, counting only games of at least 45 minutes."""
    total = 0.0
    for meta in matches:
        if player_id in meta.minutes_played:
            minutes = meta.minutes_played[player_id]
        elif player_id in meta.lineup.values():
            minutes = meta.duration_s / 60.0
        else:
            continue
        if minutes >= MIN_GAME_MINUTES:
            total += minutes
    return total


def build_team_process(events, matches, area: DangerArea = DangerArea(), seed: int = 0,
                       gap: float = 60.0) -> Trajectory:
    """Build each selected match and join them into one record.

    Match ``k`` uses seed ``(seed, k)`` so rebuilding a subset is reproducible.
    """
    from .trajectory import concatenate

    by_match = {}
    for ev in events:
        by_match.setdefault(ev.match_id, []).append(ev)
    parts = []
    for k, meta in enumerate(matches):
        sub_seed = np.random.SeedSequence([int(seed), k])
        parts.append(build_point_process(by_match.get(meta.match_id, []), meta, area, sub_seed))
    return concatenate(parts, gap=gap)
