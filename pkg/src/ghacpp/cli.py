"""Command line entry point: ``ghacpp run | batch | validate``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .executor import ALGOS, MissionConfig, MissionError, run_mission
from .mapping import dump_map
from .render import render_svg
from .report import RunRecord, aggregate, deltas_csv, report_csv, write_metrics_csv
from .world import ScenarioError, load_world, validate_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNREADABLE = 3
EXIT_SCHEMA = 4
EXIT_MISSION = 5
EXIT_OUTPUT = 6

EPILOG = """exit codes:
  0  success
  2  usage error (unknown flag or bad argument)
  3  scenario file unreadable or not valid JSON
  4  scenario schema or consistency violation
  5  mission error (for example a blocked start pose)
  6  output directory not writable

environment:
  GHACPP_THREADS        worker processes for batch (default 1)
  GHACPP_DISABLE_NUMBA  set to 1 to use the pure numpy kernels
"""


class CliError(Exception):
    def __init__(self, code: int, category: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.category = category

    def __reduce__(self):
        return (CliError, (self.code, self.category, str(self)))


def _read_doc(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_UNREADABLE, "unreadable", f"{path}: {exc}") from None


def _scenario_name(doc: dict, path: str) -> str:
    return doc.get("name") or Path(path).stem


def parse_seeds(text: str) -> list[int]:
    """``"1..10"`` (inclusive range) or a comma list such as ``"1,4,9"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def parse_algos(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGOS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algo(s): {','.join(bad) or text!r}")
    return algos


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, "output", str(exc)) from None
    return out


def _mission(doc: dict, algo: str, seed: int, wallclock: bool):
    try:
        world = load_world(doc)
        cfg = MissionConfig.from_scenario(doc, algo, seed)
        log, metrics, maps = run_mission(world, cfg)
    except ScenarioError as exc:
        raise CliError(EXIT_SCHEMA, "schema", str(exc)) from None
    except (MissionError, ValueError) as exc:
        raise CliError(EXIT_MISSION, "mission", str(exc)) from None
    if not wallclock:
        metrics = replace(metrics, planning_wallclock_ms=None)
    return world, log, metrics, maps


def _batch_job(job):
    doc, name, algo, seed, wallclock = job
    _, _, metrics, _ = _mission(doc, algo, seed, wallclock)
    return RunRecord(name, algo, seed, metrics)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GHACPP_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    doc = _read_doc(args.scenario)
    try:
        validate_scenario(doc)
    except ScenarioError as exc:
        raise CliError(EXIT_SCHEMA, "schema", str(exc)) from None
    print(f"ok {args.scenario}")
    return EXIT_OK


def cmd_run(args) -> int:
    doc = _read_doc(args.scenario)
    name = _scenario_name(doc, args.scenario)
    world, log, metrics, maps = _mission(doc, args.algo, args.seed, args.wallclock)
    out = _out_dir(args.out)
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(fh, [RunRecord(name, args.algo, args.seed, metrics)])
    if args.log:
        (out / "events.jsonl").write_text(log.to_jsonl(), encoding="utf-8")
    if args.svg:
        (out / "trajectory.svg").write_text(render_svg(log, maps, world), encoding="utf-8")
    if args.map:
        (out / "map.txt").write_text(dump_map(maps), encoding="utf-8")
    print(
        f"{name} {args.algo} seed={args.seed} coverage={metrics.coverage_pct:.2f}% "
        f"path={metrics.path_length_m:.2f}m turns={metrics.n_turns} "
        f"irradiation_events={metrics.irradiation_events} end={log.end_reason}"
    )
    return EXIT_OK


def cmd_batch(args) -> int:
    jobs = []
    for path in args.scenario:
        doc = _read_doc(path)
        try:
            validate_scenario(doc)
        except ScenarioError as exc:
            raise CliError(EXIT_SCHEMA, "schema", f"{path}: {exc}") from None
        name = _scenario_name(doc, path)
        jobs.extend((doc, name, algo, seed, args.wallclock) for algo in args.algos for seed in args.seeds)
    out = _out_dir(args.out)
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_batch_job, jobs))
    else:
        records = [_batch_job(j) for j in jobs]
    records.sort(key=lambda r: (r.scenario, r.algo, r.seed))
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(fh, records)
    report = aggregate(records)
    (out / "report.csv").write_text(report_csv(report), encoding="utf-8")
    (out / "deltas.csv").write_text(deltas_csv(report), encoding="utf-8")
    for d in report.deltas:
        if d.metric in ("coverage_pct", "path_length_m", "n_turns"):
            print(f"{d.scenario} {d.metric}: ghacpp={d.ghacpp_mean:.2f} stc={d.baseline_mean:.2f} delta={d.delta_pct:.1f}%")
    print(f"{len(records)} runs written to {out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="ghacpp",
        description="Human-aware coverage planning simulator.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="schema-check a scenario file", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="run one mission", epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("--scenario", required=True)
    r.add_argument("--algo", choices=ALGOS, default="ghacpp")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--out", default=".", help="output directory (default: current directory)")
    r.add_argument("--log", action="store_true", help="write events.jsonl")
    r.add_argument("--svg", action="store_true", help="write trajectory.svg")
    r.add_argument("--map", action="store_true", help="write a text dump of the final map")
    r.add_argument("--wallclock", action="store_true", help="record planning wall-clock (breaks byte-identical output)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="seed sweep with aggregate report", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    b.add_argument("--scenario", required=True, nargs="+")
    b.add_argument("--algos", type=parse_algos, default=["ghacpp", "stc"])
    b.add_argument("--seeds", type=parse_seeds, default=list(range(1, 11)))
    b.add_argument("--out", required=True)
    b.add_argument("--wallclock", action="store_true", help="record planning wall-clock (breaks byte-identical output)")
    b.set_defaults(func=cmd_batch)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
