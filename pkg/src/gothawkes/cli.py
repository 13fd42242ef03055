"""Command-line entry point: ``gothawkes <subcommand> ...``.

Exit status is 0 on success, 2 on invalid input and 1 on internal errors.
"""

from __future__ import annotations

import argparse
import collections
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import HawkesModel, as_branching
from .estimate import FitConfig, fit
from .exceptions import GotHawkesError, InstabilityError, ValidationError
from .got import GotReport, got_report, team_aggregate
from .ingest import (
    DangerArea,
    build_team_process,
    playing_minutes,
    read_events,
    read_metas,
    select_games,
)
from .reports import (
    INDICES,
    entry_from_report,
    graph_dot,
    kendall_tau,
    load_reports,
    rank_entries,
    ranking_csv,
)
from .simulate import StudyConfig, run_accuracy_study, simulate
from .trajectory import Trajectory, concatenate

log = logging.getLogger("gothawkes")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_simulate(args):
    model = HawkesModel.from_json(args.model)
    traj = simulate(model, args.horizon_s, args.seed)
    _write(args.out, traj.to_json() + "\n")
    log.info("simulated %d events over %.1f s", len(traj), traj.horizon)


def cmd_estimate(args):
    trajs = [Trajectory.from_json(p) for p in args.traj]
    traj = trajs[0] if len(trajs) == 1 else concatenate(trajs)
    kwargs = {}
    if args.beta_grid:
        kwargs["beta_grid"] = tuple(args.beta_grid)
    if args.null_threshold is not None:
        kwargs["null_threshold"] = args.null_threshold
    result = fit(traj, FitConfig(**kwargs))
    _write(args.out, result.model.to_json() + "\n")
    diag = args.diagnostics or str(Path(args.out).with_suffix("")) + ".diagnostics.json"
    _write(diag, json.dumps(result.diagnostics_dict(), indent=2, allow_nan=False) + "\n")
    log.info("log-likelihood %.6f", result.loglik)


def cmd_ingest(args):
    events = read_events(args.events)
    metas = read_metas(args.meta)
    if args.team:
        metas = [dataclasses.replace(m, team=args.team) for m in metas]
    cluster = args.cluster
    if cluster is None:
        cluster = collections.Counter(m.cluster for m in metas).most_common(1)[0][0]
    required = {}
    if args.position is not None:
        if args.player is None:
            raise ValidationError("--position requires --player")
        required[args.position] = args.player
    selected = select_games(metas, cluster, required, fixed_eleven=args.fixed_eleven)
    if not selected:
        raise ValidationError("no match satisfies the selection")
    traj = build_team_process(events, selected, DangerArea(), args.seed)
    _write(args.out, traj.to_json() + "\n")
    summary = {"cluster": cluster, "matches": [m.match_id for m in selected],
               "events": len(traj), "horizon_s": traj.horizon}
    if args.player is not None:
        summary["player_minutes"] = playing_minutes(selected, args.player)
    print(json.dumps(summary))


def cmd_study(args):
    config = StudyConfig(horizons=tuple(args.horizons), replications=args.replications,
                         seed=args.seed)
    report = run_accuracy_study(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "study.csv", report.to_csv())
    _write(out / "summary.txt", report.to_table() + "\n")
    print(report.to_table())


def cmd_got(args):
    model = HawkesModel.from_json(args.model)
    meta = {k: v for k, v in (("player", args.player), ("position", args.position),
                              ("team", args.team), ("minutes", args.minutes)) if v is not None}
    report = got_report(model, meta)
    _write(args.out, report.to_json() + "\n")
    if args.csv:
        _write(args.csv, report.to_csv())
    if args.graph:
        _write(args.graph, graph_dot(report))
    print(report.to_table())


def cmd_rank(args):
    entries = [entry_from_report(r, args.index) for r in load_reports(args.reports)]
    ranked = rank_entries(entries, args.min_minutes, args.top)
    _write(args.out, ranking_csv(ranked, args.index))


def cmd_teams(args):
    rows = []
    for r in load_reports(args.reports):
        K = np.zeros((12, 12))
        K[11, :] = r.threat_row
        rows.append(team_aggregate(as_branching(K), str(r.meta.get("team", ""))))
    rows.sort(key=lambda a: (-a.got_d_sum, a.team))
    lines = ["rank,team,got_d_sum"] + [f"{k},{a.team},{a.got_d_sum!r}"
                                      for k, a in enumerate(rows, start=1)]
    _write(args.out, "\n".join(lines) + "\n")


def cmd_graph(args):
    report = GotReport.from_json(args.report)
    _write(args.out, graph_dot(report, args.threshold))


def _read_ranking(path) -> list:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()]


def cmd_kendall(args):
    print(repr(kendall_tau(_read_ranking(args.a), _read_ranking(args.b))))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gothawkes", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a trajectory from a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--horizon-s", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit a model to one or more trajectory JSONs")
    p.add_argument("--traj", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics")
    p.add_argument("--beta-grid", type=_floats)
    p.add_argument("--null-threshold", type=float)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ingest", help="build a 12-dim trajectory from event logs")
    p.add_argument("--events", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--cluster", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--team", choices=("home", "away"))
    p.add_argument("--position", type=int, choices=range(1, 12), metavar="P")
    p.add_argument("--player")
    p.add_argument("--fixed-eleven", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("study", help="estimator accuracy study on simulated data")
    p.add_argument("--horizons", type=_floats, default=[300, 600, 1200, 2400],
                   help="minutes, comma-separated")
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("got", help="GoT indices of a fitted 12-dim model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--graph")
    p.add_argument("--player")
    p.add_argument("--position", type=int)
    p.add_argument("--team")
    p.add_argument("--minutes", type=float)
    p.set_defaults(func=cmd_got)

    p = sub.add_parser("rank", help="rank players from a directory of GoT reports")
    p.add_argument("--reports", required=True)
    p.add_argument("--index", choices=INDICES, default="got_i90")
    p.add_argument("--min-minutes", type=float, default=600.0)
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("teams", help="rank teams by summed direct GoT")
    p.add_argument("--reports", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_teams)

    p = sub.add_parser("graph", help="Graphviz interaction graph from a GoT report")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.02)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("kendall", help="Kendall tau-b of two rankings (one item per line)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_kendall)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValidationError, InstabilityError, FileNotFoundError, json.JSONDecodeError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GotHawkesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
