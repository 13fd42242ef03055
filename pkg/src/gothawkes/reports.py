"""Rankings, interaction graphs, rank correlation and study tables."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ItemMismatch, ValidationError
from .got import N_POSITIONS, GotReport

INDICES = ("got_d", "got_i", "got_d90", "got_i90")
MIN_MINUTES = 600.0
TOP_N = 20
EXTENDED_TOP_N = 100
EDGE_DISPLAY_THRESHOLD = 0.02


@dataclass(frozen=True)
class RankEntry:
    name: str
    position: int
    team: str
    minutes: float
    value: float


def entry_from_report(report: GotReport, index: str) -> RankEntry:
    """Credit the player named in ``report.meta`` with the index of their position."""
    if index not in INDICES:
        raise ValidationError(f"unknown index {index!r}; expected one of {INDICES}")
    meta = report.meta
    missing = [k for k in ("player", "position", "team", "minutes") if k not in meta]
    if missing:
        raise ValidationError(f"report meta lacks {missing}")
    p = int(meta["position"])
    value = float(getattr(report, index)[p - 1])
    return RankEntry(str(meta["player"]), p, str(meta["team"]), float(meta["minutes"]), value)


def rank_entries(entries, min_minutes: float = MIN_MINUTES, top: int | None = TOP_N) -> list:
    """Filter by playing time and sort: index desc, then minutes desc, then name asc.

    A player may appear once per position.  Ranks are 1..n with no repeats.
    """
    kept = [e for e in entries if e.minutes >= min_minutes]
    kept.sort(key=lambda e: (-e.value, -e.minutes, e.name, e.position))
    return kept if top is None else kept[:top]


def ranking_csv(ranked, index: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "name", "position", "team", "minutes", index])
    for r, e in enumerate(ranked, start=1):
        minutes = int(e.minutes) if float(e.minutes).is_integer() else e.minutes
        w.writerow([r, e.name, e.position, e.team, minutes, repr(e.value)])
    return buf.getvalue()


def load_reports(directory) -> list:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ValidationError(f"no report JSON files in {directory}")
    return [GotReport.from_json(p) for p in paths]


# ---------------------------------------------------------------- rank correlation


def _scores(ranking) -> dict:
    if isinstance(ranking, dict):
        return {k: float(v) for k, v in ranking.items()}
    items = list(ranking)
    if len(set(items)) != len(items):
        raise ValidationError("ordered ranking contains duplicate items")
    n = len(items)
    return {item: float(n - k) for k, item in enumerate(items)}


def kendall_tau(ranking_a, ranking_b) -> float:
    """Kendall tau-b between two rankings of the same items.

    Each ranking is an ordered sequence (best first) or a mapping
    ``item -> score`` (higher is better; ties allowed).
    """
    a, b = _scores(ranking_a), _scores(ranking_b)
    if set(a) != set(b):
        raise ItemMismatch("rankings do not cover the same items")
    items = list(a)
    n = len(items)
    if n < 2:
        raise ValidationError("need at least two items")
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[items[i]] - a[items[j]]
            db = b[items[i]] - b[items[j]]
            if da == 0 and db == 0:
                ties_a += 1
                ties_b += 1
            elif da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0:
        return float("nan")
    return (concordant - discordant) / denom


# ---------------------------------------------------------------- interaction graph


def _color(value: float, vmax: float) -> str:
    # white -> red ramp
    s = 0.0 if vmax <= 0 else min(max(value / vmax, 0.0), 1.0)
    gb = int(round(255 * (1.0 - s)))
    return f"#ff{gb:02x}{gb:02x}"


def graph_dot(report: GotReport, threshold: float = EDGE_DISPLAY_THRESHOLD,
              labels: dict | None = None) -> str:
    """Graphviz description of the position interaction network.

    An edge ``p1 -> p2`` with ``weight = K[p2, p1]`` is the expected number of
    touches at ``p2`` caused by one touch at ``p1``; edges below ``threshold``
    are omitted, as are self-loops.  Node ``size`` is the sum of displayed
    incoming weights and ``got_i`` drives the fill colour.
    """
    edges = np.asarray(report.edges)
    shown = edges >= threshold
    np.fill_diagonal(shown, False)  # self-excitation is not drawn
    size = np.where(shown, edges, 0.0).sum(axis=1)
    vmax = float(np.max(report.got_i)) if len(report.got_i) else 0.0
    labels = labels or {}
    lines = ["digraph got {", "  node [shape=circle, style=filled];"]
    for p in range(1, N_POSITIONS + 1):
        k = p - 1
        label = labels.get(p, str(p))
        lines.append(
            f'  "{p}" [label="{label}", size={float(size[k])!r}, got_i={float(report.got_i[k])!r}, '
            f'width={0.4 + 2.0 * size[k]:.4f}, fillcolor="{_color(float(report.got_i[k]), vmax)}"];'
        )
    for giver in range(N_POSITIONS):
        for receiver in range(N_POSITIONS):
            if shown[receiver, giver]:
                w = float(edges[receiver, giver])
                lines.append(
                    f'  "{giver + 1}" -> "{receiver + 1}" [weight={w!r}, penwidth={1.0 + 20.0 * w:.4f}];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_dot(text: str) -> tuple:
    """Read back ``(node_sizes, edges)`` from :func:`graph_dot` output."""
    sizes, edges = {}, {}
    for line in text.splitlines():
        m = re.match(r'\s*"(\d+)" -> "(\d+)" \[weight=([^,\]]+)', line)
        if m:
            edges[(int(m.group(1)), int(m.group(2)))] = float(m.group(3))
            continue
        m = re.match(r'\s*"(\d+)" \[.*size=([^,\]]+)', line)
        if m:
            sizes[int(m.group(1))] = float(m.group(2))
    return sizes, edges
