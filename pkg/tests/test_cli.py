import csv
import json
import subprocess
import sys

import pytest

from dynfix.cli import EXIT_INPUT, EXIT_OK, EXIT_UNSUPPORTED, EXIT_VIOLATION, check_state, main
from dynfix.simulation import TRACE_COLUMNS


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main(["run", *argv, "--out", str(out), "--dump-state"])
    return code, out


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_empty_schedule_is_free(tmp_path):
    code, out = run(tmp_path, "--protocol", "mm", "--n", "8", "--churn", "0")
    s = summary(out)
    assert code == EXIT_OK
    assert s["changes"] == 0 and s["incorrect"] == 0 and s["quiescent"]
    rows = list(csv.reader((out / "trace.csv").open()))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) - 1 == s["rounds"]


@pytest.mark.parametrize("protocol", ["mm", "mis", "coloring-deg", "coloring-delta", "mwvc"])
def test_random_churn_run_is_clean(tmp_path, protocol):
    extra = ["--delta", "4"] if protocol == "coloring-delta" else []
    code, out = run(tmp_path, "--protocol", protocol, "--n", "12", "--churn", "3", "--rounds", "60",
                    "--seed", "9", "--strict", *extra)
    s = summary(out)
    assert code == EXIT_OK, s["violations"]
    assert s["max_ratio"] <= 10 and s["final_inconsistent_stars"] == 0
    assert check_state(json.loads((out / "state.json").read_text())) == []


def test_mis_cascade_reports_blame(tmp_path):
    code, out = run(tmp_path, "--protocol", "mis", "--n", "10", "--pattern", "mis-cascade", "--rounds", "2000")
    s = summary(out)
    assert code == EXIT_OK
    assert s["blame"]["charged"] > 0 and s["blame"]["epoch_budget_ok"]
    assert s["max_ratio"] <= 10


def test_node_delete_on_cover_is_unsupported(tmp_path):
    sched = tmp_path / "s.jsonl"
    sched.write_text('{"round": 0, "op": "e+", "u": 0, "v": 1}\n{"round": 2, "op": "v-", "u": 1}\n')
    code, _ = run(tmp_path, "--protocol", "mwvc", "--n", "3", "--schedule", str(sched))
    assert code == EXIT_UNSUPPORTED


def test_bad_schedule_is_input_error(tmp_path):
    sched = tmp_path / "s.jsonl"
    sched.write_text('{"round": 0, "op": "e-", "u": 0, "v": 1}\n')
    code, _ = run(tmp_path, "--n", "3", "--schedule", str(sched))
    assert code == EXIT_INPUT


def test_corrupted_state_fails_check(tmp_path, capsys):
    sched = tmp_path / "s.jsonl"
    sched.write_text('{"round": 0, "op": "e+", "u": 0, "v": 1}\n{"round": 3, "op": "e+", "u": 1, "v": 2}\n')
    code, out = run(tmp_path, "--protocol", "mm", "--n", "4", "--schedule", str(sched))
    state = json.loads((out / "state.json").read_text())
    assert state["dirty"] == [] and state["labels"]["0"] == 1
    state["labels"]["0"] = None
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(state))
    capsys.readouterr()
    assert main(["check", "--state", str(bad)]) == EXIT_VIOLATION
    report = json.loads(capsys.readouterr().out)
    assert report["violations"][0]["type"] == "SolutionInvalid"


def test_gen_then_replay(tmp_path):
    sched = tmp_path / "g.jsonl"
    assert main(["gen", "--n", "8", "--churn", "2", "--rounds", "30", "--seed", "4", "--out", str(sched)]) == 0
    a = run(tmp_path, "--n", "8", "--schedule", str(sched), name="a")[1]
    b = run(tmp_path, "--n", "8", "--churn", "2", "--rounds", "30", "--seed", "4", name="b")[1]
    assert summary(a)["changes"] == summary(b)["changes"]


def test_runs_are_byte_identical(tmp_path):
    argv = ["--protocol", "mis", "--n", "16", "--churn", "4", "--rounds", "80", "--seed", "17"]
    a = run(tmp_path, *argv, name="a")[1]
    b = run(tmp_path, *argv, name="b")[1]
    for f in ("trace.csv", "summary.json", "state.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dynfix", "run", "--n", "4", "--churn", "1", "--rounds", "10",
                           "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("mm:")
