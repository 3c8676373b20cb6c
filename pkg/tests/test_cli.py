import csv
import json
import os
import subprocess
import sys

import pytest

from ghacpp.cli import CliError, main, parse_algos, parse_seeds

from conftest import scenario_path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_validate_ok(capsys):
    assert run_cli("validate", "--scenario", scenario_path("empty_3x4")) == 0
    assert capsys.readouterr().out.startswith("ok ")


def test_run_twice_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert run_cli("run", "--scenario", scenario_path("center_obstacle_3x4"), "--algo", "ghacpp", "--seed", 3,
                       "--out", out, "--log", "--svg", "--map") == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"metrics.csv", "events.jsonl", "trajectory.svg", "map.txt"}
    rows = list(csv.DictReader(outs[0]["metrics.csv"].decode().splitlines()))
    assert rows[0]["planning_wallclock_ms"] == ""
    events = [json.loads(line) for line in outs[0]["events.jsonl"].decode().splitlines()]
    assert events[-1]["event"] == "MissionEnd"


def test_wallclock_flag_records_timing(tmp_path):
    assert run_cli("run", "--scenario", scenario_path("empty_3x4"), "--algo", "stc", "--out", tmp_path, "--wallclock") == 0
    row = next(csv.DictReader((tmp_path / "metrics.csv").open()))
    assert float(row["planning_wallclock_ms"]) > 0


@pytest.mark.slow
def test_batch_writes_sixty_rows(tmp_path):
    scen = [scenario_path(n) for n in ("empty_3x4", "center_obstacle_3x4", "inner_wall_3x4")]
    assert run_cli("batch", "--scenario", *scen, "--algos", "ghacpp,stc", "--seeds", "1..10", "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "metrics.csv").open()))
    assert len(rows) == 60
    assert {r["algo"] for r in rows} == {"ghacpp", "stc"}
    deltas = (tmp_path / "deltas.csv").read_text().splitlines()
    assert deltas[0].startswith("#") and len(deltas) > 3
    assert (tmp_path / "report.csv").read_text().startswith("# sd")


def test_exit_codes(tmp_path, capsys):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    bad_schema = tmp_path / "schema.json"
    bad_schema.write_text(json.dumps({"width_m": 3}))
    blocked = tmp_path / "blocked.json"
    blocked.write_text(json.dumps({"width_m": 3, "height_m": 4, "resolution_m": 0.05, "start": {"x": 0.2, "y": 0.2}}))
    assert run_cli("validate", "--scenario", tmp_path / "missing.json") == 3
    assert run_cli("validate", "--scenario", bad_json) == 3
    assert run_cli("validate", "--scenario", bad_schema) == 4
    assert run_cli("run", "--scenario", blocked, "--out", tmp_path / "o") == 5
    not_dir = tmp_path / "file"
    not_dir.write_text("x")
    assert run_cli("run", "--scenario", scenario_path("empty_3x4"), "--algo", "stc", "--out", not_dir / "sub") == 6
    err = capsys.readouterr().err
    for cat in ("unreadable", "schema", "mission", "output"):
        assert f"error[{cat}]" in err
    with pytest.raises(SystemExit) as exc:
        run_cli("run", "--bogus")
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run_cli("batch", "--scenario", "x", "--out", tmp_path, "--algos", "dfs")
    assert exc.value.code == 2


def test_writes_only_under_out(tmp_path):
    work = tmp_path / "cwd"
    work.mkdir()
    env = dict(os.environ)
    proc = subprocess.run(
        [sys.executable, "-m", "ghacpp.cli", "run", "--scenario", scenario_path("empty_3x4"), "--algo", "stc",
         "--out", "results", "--log", "--svg"],
        cwd=work, env=env, capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert sorted(p.name for p in work.iterdir()) == ["results"]
    assert sorted(p.name for p in (work / "results").iterdir()) == ["events.jsonl", "metrics.csv", "trajectory.svg"]


def test_seed_and_algo_parsing():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("3,1") == [3, 1]
    assert parse_algos("stc") == ["stc"]
    for bad in ("5..1", "a"):
        with pytest.raises(Exception):
            parse_seeds(bad)


def test_cli_error_pickles():
    import pickle

    e = pickle.loads(pickle.dumps(CliError(4, "schema", "boom")))
    assert (e.code, e.category, str(e)) == (4, "schema", "boom")
