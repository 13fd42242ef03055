import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gothawkes.cli import build_parser, main
from gothawkes.core import HawkesModel
from gothawkes.got import GotReport, got_report
from gothawkes.simulate import example_team_model
from gothawkes.trajectory import Trajectory

DATA = Path(__file__).parent / "data"


@pytest.fixture
def team_model(tmp_path):
    path = tmp_path / "model.json"
    example_team_model().to_json(path)
    return path


def test_simulate_estimate_got_roundtrip(tmp_path, team_model, capsys):
    traj = tmp_path / "traj.json"
    assert main(["simulate", "--model", str(team_model), "--horizon-s", "20000",
                 "--seed", "1", "--out", str(traj)]) == 0
    first = traj.read_bytes()
    assert main(["simulate", "--model", str(team_model), "--horizon-s", "20000",
                 "--seed", "1", "--out", str(traj)]) == 0
    assert traj.read_bytes() == first
    t = Trajectory.from_json(traj)
    assert t.d == 12 and len(t) > 0

    fitted = tmp_path / "fit.json"
    assert main(["estimate", "--traj", str(traj), "--out", str(fitted),
                 "--beta-grid", "0.4,0.8,1.6", "--null-threshold", "0.001"]) == 0
    diag = json.loads((tmp_path / "fit.diagnostics.json").read_text())
    assert set(diag) == {"loglik", "per_dimension_loglik", "null_mask", "dimensions"}
    assert len(diag["dimensions"]) == 12

    report = tmp_path / "report.json"
    csv = tmp_path / "report.csv"
    dot = tmp_path / "graph.dot"
    assert main(["got", "--model", str(fitted), "--out", str(report), "--csv", str(csv),
                 "--graph", str(dot), "--player", "x", "--position", "11",
                 "--team", "syn", "--minutes", "900"]) == 0
    r = GotReport.from_json(report)
    direct = got_report(HawkesModel.from_json(fitted))
    np.testing.assert_array_equal(r.got_i90, direct.got_i90)
    np.testing.assert_array_equal(r.got_d, direct.got_d)
    assert r.meta == {"player": "x", "position": 11, "team": "syn", "minutes": 900.0}
    assert csv.read_text().startswith("position,got_d,got_i,got_d90,got_i90,touches_90\n")
    assert dot.read_text().startswith("digraph")
    assert "GoT^i_90" in capsys.readouterr().out


def test_estimate_concatenates_several_trajectories(tmp_path, team_model):
    paths = []
    for s in range(2):
        p = tmp_path / f"t{s}.json"
        main(["simulate", "--model", str(team_model), "--horizon-s", "5400", "--seed", str(s),
              "--out", str(p)])
        paths.append(str(p))
    out = tmp_path / "m.json"
    assert main(["estimate", "--traj", *paths, "--out", str(out),
                 "--diagnostics", str(tmp_path / "d.json")]) == 0
    total = sum(len(Trajectory.from_json(p)) for p in paths)
    diag = json.loads((tmp_path / "d.json").read_text())
    assert sum(d["n_events"] for d in diag["dimensions"]) == total


def test_study_single_horizon_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / f"s{k}"
        assert main(["study", "--horizons", "100", "--replications", "1", "--seed", "7",
                     "--out", str(d)]) == 0
        outs.append((d / "study.csv").read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "horizon_min,false_positive,false_negative_error,wmape,failures"
    assert len(lines) == 2 and lines[1].startswith("100,")
    assert "wMAPE" in (tmp_path / "s0" / "summary.txt").read_text()


def test_study_default_horizons():
    args = build_parser().parse_args(["study", "--out", "x"])
    assert args.horizons == [300, 600, 1200, 2400] and args.replications == 20


def test_ingest(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["ingest", "--events", str(DATA / "scripted_match.jsonl"),
                 "--meta", str(DATA / "scripted_match_meta.json"), "--seed", "3",
                 "--out", str(out), "--position", "10", "--player", "h10"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cluster"] == 1 and summary["matches"] == ["scripted-1"]
    assert summary["player_minutes"] == 90.0
    t = Trajectory.from_json(out)
    assert summary["events"] == len(t) == 11


def test_ingest_position_requires_player(tmp_path):
    assert main(["ingest", "--events", str(DATA / "scripted_match.jsonl"),
                 "--meta", str(DATA / "scripted_match_meta.json"),
                 "--out", str(tmp_path / "t.json"), "--position", "10"]) == 2


def test_ingest_no_matching_games(tmp_path):
    assert main(["ingest", "--events", str(DATA / "scripted_match.jsonl"),
                 "--meta", str(DATA / "scripted_match_meta.json"),
                 "--out", str(tmp_path / "t.json"), "--cluster", "3"]) == 2


def _reports_dir(tmp_path):
    d = tmp_path / "reports"
    d.mkdir()
    base = example_team_model()
    rows = [("hazard", 11, "chelsea", 2400), ("willian", 9, "chelsea", 1800),
            ("oscar", 10, "chelsea", 590), ("mbappe", 11, "psg", 2000)]
    for k, (name, pos, team, minutes) in enumerate(rows):
        mu = base.mu * (1 + 0.1 * k)
        alpha = base.alpha.copy()
        alpha[11] *= 1 - 0.05 * k
        got_report(HawkesModel(mu, alpha, base.beta),
                   {"player": name, "position": pos, "team": team, "minutes": minutes}
                   ).to_json(d / f"{name}.json")
    return d


def test_rank_and_teams(tmp_path):
    d = _reports_dir(tmp_path)
    out = tmp_path / "rank.csv"
    assert main(["rank", "--reports", str(d), "--index", "got_d", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rank,name,position,team,minutes,got_d"
    assert [l.split(",")[1] for l in lines[1:]] == ["hazard", "mbappe", "willian"]
    teams = tmp_path / "teams.csv"
    assert main(["teams", "--reports", str(d), "--out", str(teams)]) == 0
    t = teams.read_text().splitlines()
    assert t[0] == "rank,team,got_d_sum" and len(t) == 5


def test_graph_and_kendall(tmp_path, capsys):
    d = _reports_dir(tmp_path)
    out = tmp_path / "g.dot"
    assert main(["graph", "--report", str(d / "hazard.json"), "--out", str(out),
                 "--threshold", "0.1"]) == 0
    assert out.read_text().count("->") == sum(
        1 for v in example_team_model().alpha[:11, :11].ravel() / 0.8 if v >= 0.1 - 1e-12)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("a\nb\nc\nd\ne\n")
    b.write_text("b\na\nc\ne\nd\n")
    capsys.readouterr()
    assert main(["kendall", "--a", str(a), "--b", str(b)]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.6)
    b.write_text("a\nb\nc\nd\nz\n")
    assert main(["kendall", "--a", str(a), "--b", str(b)]) == 2


def test_error_exit_codes(tmp_path, capsys):
    assert main(["got", "--model", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"d": 1, "mu": [-1.0], "alpha": [[0.1]], "beta": [[1.0]]}))
    assert main(["simulate", "--model", str(bad), "--horizon-s", "10", "--out", str(tmp_path / "t")]) == 2
    unstable = tmp_path / "u.json"
    HawkesModel([0.1], [[2.0]], [[1.0]]).to_json(unstable)
    assert main(["simulate", "--model", str(unstable), "--horizon-s", "10",
                 "--out", str(tmp_path / "t")]) == 2
    assert "error:" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("gothawkes")
    cmd = [exe] if exe else [sys.executable, "-m", "gothawkes"]
    proc = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
