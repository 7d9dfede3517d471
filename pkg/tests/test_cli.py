import json
import subprocess
import sys

import pytest

from swapagree.cli import EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, EXIT_VIOLATION, main, parse_schedule
from swapagree.errors import UsageError
from swapagree.harness import Explicit, RoundRobin, SeededRandom, Solo, replay
from swapagree.tracefile import read_records, read_trace


def lines(text):
    return [json.loads(x) for x in text.splitlines() if x.strip()]


def test_parse_schedule():
    assert parse_schedule("solo:p3", 0) == Solo(3)
    assert parse_schedule("roundrobin", 0) == RoundRobin()
    assert parse_schedule("roundrobin:2,0", 0) == RoundRobin((2, 0))
    assert parse_schedule("random", 9) == SeededRandom(9)
    assert parse_schedule("explicit:0,1,1", 0) == Explicit([0, 1, 1])
    with pytest.raises(UsageError):
        parse_schedule("chaos", 0)


def test_run_solo_then_check_and_replay(tmp_path, capsys):
    out = tmp_path / "solo.jsonl"
    assert main(["run", "--n", "2", "--k", "1", "--m", "2", "--inputs", "0,1", "--schedule", "solo:p0", "--out", str(out)]) == EXIT_OK
    trace = read_trace(out)
    assert len(trace.events) == 4 and trace.decisions[0].value == 0
    capsys.readouterr()
    assert main(["check", str(out), "--properties", "all"]) == EXIT_OK
    verdicts = [r["verdict"] for r in lines(capsys.readouterr().out)]
    assert verdicts == ["pass"] * 5
    assert main(["replay", str(out)]) == EXIT_OK
    assert lines(capsys.readouterr().out)[0]["replay"] == "ok"


def test_run_hits_step_limit(tmp_path):
    out = tmp_path / "r.jsonl"
    code = main(["run", "--n", "3", "--k", "1", "--m", "2", "--inputs", "1,1,1", "--schedule", "roundrobin", "--out", str(out)])
    assert code == EXIT_RESOURCE
    assert read_trace(out).limit_hit


def test_run_from_config_file(tmp_path, monkeypatch):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 4, "k": 2, "m": 3, "objects": 2, "inputs": [0, 1, 2, 0], "schedule": "random", "step_limit": 50}))
    monkeypatch.setenv("SWAPAGREE_SEED", "17")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", "--config", str(cfg), "--out", str(a)])
    main(["run", "--config", str(cfg), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    trace = read_trace(a)
    assert trace.seed == 17 and len(trace.events) == 50
    assert replay(trace) == trace.final


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--n", "2"],
        ["run", "--n", "2", "--k", "1", "--inputs", "0"],
        ["run", "--n", "2", "--k", "1", "--m", "2", "--inputs", "0,5"],
        ["run", "--n", "2", "--k", "3"],
        ["run", "--n", "2", "--k", "1", "--inputs", "0,x"],
        ["explore", "--n", "2", "--k", "1"],
        ["valency", "--n", "3", "--k", "1", "--q", "q7"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "usage error" in capsys.readouterr().err


def test_check_property_names(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    main(["run", "--n", "2", "--k", "1", "--inputs", "0,1", "--schedule", "solo:p1", "--out", str(out)])
    capsys.readouterr()
    assert main(["check", str(out), "--properties", ""]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "k_agreement" in err and "manyprocesses" in err
    assert main(["check", str(out), "--properties", "validity,bogus"]) == EXIT_USAGE
    assert main(["check", str(out), "--properties", "validity", "--out", str(tmp_path / "rep.jsonl")]) == EXIT_OK
    assert read_records(tmp_path / "rep.jsonl")[0]["property"] == "validity"


def test_check_flags_tampered_trace(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    main(["run", "--n", "2", "--k", "1", "--inputs", "0,1", "--schedule", "solo:p0", "--out", str(out)])
    rows = out.read_text().splitlines()
    event = json.loads(rows[2])
    event["resp"] = [[7, 7], 1]
    rows[2] = json.dumps(event)
    out.write_text("\n".join(rows) + "\n")
    capsys.readouterr()
    assert main(["check", str(out), "--properties", "validity"]) == EXIT_VIOLATION
    first = lines(capsys.readouterr().out)[0]
    assert first["property"] == "replay" and first["witness"]["step"] == 1
    assert main(["replay", str(out)]) == EXIT_VIOLATION


def test_corrupt_file_is_reported(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert main(["replay", str(bad)]) == EXIT_VIOLATION
    assert main(["replay", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE


def test_adversary_violation_and_certificate(tmp_path, capsys):
    trace_path, summary_path = tmp_path / "v.jsonl", tmp_path / "s.jsonl"
    code = main(["adversary", "--n", "3", "--k", "1", "--objects", "1", "--out", str(trace_path), "--summary", str(summary_path)])
    assert code == EXIT_VIOLATION
    record = read_records(summary_path)[0]
    assert record["verdict"] == "violation" and record["object_count"] == 1
    trace = read_trace(trace_path)
    assert len(trace.decided_values()) == 2
    assert main(["check", str(trace_path), "--properties", "k_agreement"]) == EXIT_VIOLATION
    capsys.readouterr()
    assert main(["adversary", "--n", "3", "--k", "1", "--objects", "2"]) == EXIT_OK
    record = lines(capsys.readouterr().out)[0]
    assert record["verdict"] == "certificate" and record["consumed"] == 2 and record["q_count"] == 2


def test_explore_and_valency(capsys, monkeypatch):
    assert main(["explore", "--n", "2", "--k", "1", "--m", "2", "--depth", "10"]) == EXIT_OK
    record = lines(capsys.readouterr().out)[0]
    assert record["max_distinct_decided"] == 1 and record["inputs"] == [0, 1]
    assert main(["explore", "--n", "3", "--k", "1", "--m", "2", "--objects", "1", "--inputs", "0,1,1", "--depth", "9"]) == EXIT_VIOLATION
    capsys.readouterr()
    monkeypatch.setenv("SWAPAGREE_MEMORY_BUDGET", "20")
    assert main(["explore", "--n", "3", "--k", "1", "--depth", "10"]) == EXIT_RESOURCE
    capsys.readouterr()
    assert main(["valency", "--n", "3", "--k", "1", "--m", "2", "--q", "q0,q1", "--depth", "12"]) == EXIT_OK
    record = lines(capsys.readouterr().out)[0]
    assert record["classification"] == "bivalent" and record["subject"] == [1, 2]


def test_paired_protocol_run(tmp_path, capsys):
    out = tmp_path / "p.jsonl"
    assert main(["run", "--protocol", "paired", "--n", "4", "--k", "2", "--inputs", "5,6,7,8", "--schedule", "roundrobin", "--out", str(out)]) == EXIT_OK
    trace = read_trace(out)
    assert len(trace.events) == 4 and len(trace.decided_values()) <= 2
    assert main(["check", str(out), "--properties", "k_agreement,validity"]) == EXIT_OK
    assert main(["check", str(out), "--properties", "lap_observations"]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "swapagree", "run", "--n", "2", "--k", "1", "--inputs", "1,0", "--schedule", "solo:p1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert lines(proc.stdout)[-1]["final"]["decisions"] == [[1, 0, 3]]
