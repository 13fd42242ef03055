import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gothawkes.exceptions import ItemMismatch, ValidationError
from gothawkes.got import GotReport, got_report
from gothawkes.reports import (
    RankEntry,
    entry_from_report,
    graph_dot,
    kendall_tau,
    load_reports,
    parse_dot,
    rank_entries,
    ranking_csv,
)
from gothawkes.simulate import example_team_model

import oracles


def report_from_K(K):
    K = np.asarray(K, float)
    z = np.zeros(11)
    return GotReport(z, np.asarray(K[11, :11]), z, z, z, K[:11, :11].copy(), K[11].copy())


# ---------------------------------------------------------------- ranking

def test_minutes_filter():
    entries = [RankEntry("a", 9, "t", 599.0, 1.0), RankEntry("b", 9, "t", 600.0, 0.5)]
    assert [e.name for e in rank_entries(entries, 600)] == ["b"]


def test_tie_break_minutes_then_name():
    entries = [RankEntry("zed", 9, "t", 900, 0.3), RankEntry("amy", 9, "t", 900, 0.3),
               RankEntry("bob", 9, "t", 1200, 0.3), RankEntry("top", 4, "t", 700, 0.9)]
    assert [e.name for e in rank_entries(entries)] == ["top", "bob", "amy", "zed"]


def test_same_player_at_two_positions_listed_twice():
    entries = [RankEntry("messi", 10, "fcb", 2000, 0.2), RankEntry("messi", 9, "fcb", 800, 0.15)]
    ranked = rank_entries(entries)
    assert [(e.name, e.position) for e in ranked] == [("messi", 10), ("messi", 9)]


def test_top_n_and_csv():
    entries = [RankEntry(f"p{k:02d}", 1 + k % 11, "t", 600 + k, k / 100) for k in range(30)]
    ranked = rank_entries(entries, top=20)
    assert len(ranked) == 20 and len(rank_entries(entries, top=None)) == 30
    lines = ranking_csv(ranked, "got_i90").splitlines()
    assert lines[0] == "rank,name,position,team,minutes,got_i90"
    assert lines[1].startswith("1,p29,")
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(1, 21))


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from("abcdef"), st.integers(1, 11),
                          st.sampled_from([600.0, 700.0, 900.0]),
                          st.sampled_from([0.0, 0.1, 0.2])), max_size=30))
def test_ranking_is_total_order(rows):
    entries = [RankEntry(n, p, "t", m, v) for n, p, m, v in rows]
    ranked = rank_entries(entries, top=None)
    keys = [(-e.value, -e.minutes, e.name, e.position) for e in ranked]
    assert keys == sorted(keys)


def test_entry_from_report():
    r = got_report(example_team_model(), {"player": "h", "position": 11, "team": "x", "minutes": 900})
    e = entry_from_report(r, "got_d")
    assert e == RankEntry("h", 11, "x", 900.0, pytest.approx(0.16))
    with pytest.raises(ValidationError):
        entry_from_report(r, "xg")
    with pytest.raises(ValidationError):
        entry_from_report(got_report(example_team_model()), "got_d")


def test_load_reports(tmp_path):
    with pytest.raises(ValidationError):
        load_reports(tmp_path)
    got_report(example_team_model(), {"player": "a"}).to_json(tmp_path / "a.json")
    assert load_reports(tmp_path)[0].meta == {"player": "a"}


# ---------------------------------------------------------------- kendall

def test_kendall_trivial():
    items = list("abcdef")
    assert kendall_tau(items, items) == 1.0
    assert kendall_tau(items, items[::-1]) == -1.0


def test_kendall_five_items_two_discordant():
    a = ["a", "b", "c", "d", "e"]
    b = ["b", "a", "c", "e", "d"]
    assert oracles.brute_kendall(a, b) == pytest.approx(0.6)
    assert kendall_tau(a, b) == pytest.approx(0.6, abs=1e-15)


@settings(max_examples=100)
@given(st.permutations(list(range(9))))
def test_kendall_matches_brute_force_without_ties(perm):
    base = list(range(9))
    assert kendall_tau(base, perm) == pytest.approx(oracles.brute_kendall(base, perm), abs=1e-12)
    assert -1.0 <= kendall_tau(base, perm) <= 1.0


def test_kendall_tau_b_with_ties():
    from scipy.stats import kendalltau

    a = {"x": 0.42, "y": 0.30, "z": 0.30, "w": 0.26, "v": 0.26}
    b = {"x": 1.0, "y": 3.0, "z": 2.0, "w": 4.0, "v": 5.0}
    ref = kendalltau([a[k] for k in a], [b[k] for k in a]).statistic
    assert kendall_tau(a, b) == pytest.approx(ref, abs=1e-12)


def test_kendall_errors():
    with pytest.raises(ItemMismatch):
        kendall_tau(["a", "b"], ["a", "c"])
    with pytest.raises(ValidationError):
        kendall_tau(["a"], ["a"])
    with pytest.raises(ValidationError):
        kendall_tau(["a", "a"], ["a", "a"])
    assert math.isnan(kendall_tau({"a": 1, "b": 1}, {"a": 1, "b": 2}))


# ---------------------------------------------------------------- graph

def test_graph_zero_K_has_isolated_nodes():
    sizes, edges = parse_dot(graph_dot(report_from_K(np.zeros((12, 12)))))
    assert sorted(sizes) == list(range(1, 12)) and edges == {}
    assert all(v == 0 for v in sizes.values())


def test_graph_single_edge_direction():
    K = np.zeros((12, 12))
    K[6, 1] = 0.3  # touches of 7 caused by a touch of 2
    sizes, edges = parse_dot(graph_dot(report_from_K(K)))
    assert edges == {(2, 7): 0.3}
    assert sizes[7] == 0.3 and sizes[2] == 0.0


def test_graph_node_size_recomputed_from_file():
    r = got_report(example_team_model())
    text = graph_dot(r, threshold=0.05)
    sizes, edges = parse_dot(text)
    assert all(w >= 0.05 for w in edges.values())
    assert all(a != b for a, b in edges)
    for p in range(1, 12):
        incoming = sum(w for (src, dst), w in edges.items() if dst == p)
        assert sizes[p] == pytest.approx(incoming, abs=1e-12)
    # every displayed weight is the matching K entry
    for (src, dst), w in edges.items():
        assert w == r.edges[dst - 1, src - 1]


def test_graph_threshold_and_colour():
    r = got_report(example_team_model())
    assert len(parse_dot(graph_dot(r, 0.0))[1]) > len(parse_dot(graph_dot(r, 0.08))[1])
    text = graph_dot(r, labels={11: "Winger"})
    assert 'label="Winger"' in text and "#ff" in text and text.startswith("digraph")
