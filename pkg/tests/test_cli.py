"""CLI subcommands end to end: files in, files out, exit codes."""

import json

import pytest

from hlcmon.cli import main
from hlcmon.trace import read_trace


def run_sim(tmp_path, name="trace.jsonl", **over):
    args = {
        "workload": "conjunctive", "n": "2", "epsilon": "10", "beta": "0.2",
        "steps": "300", "seed": "3",
    }
    args.update({k.replace("_", "-"): str(v) for k, v in over.items()})
    path = tmp_path / name
    argv = ["simulate"]
    for key, val in args.items():
        argv += [f"--{key}", val]
    argv += ["--out", str(path)]
    assert main(argv) == 0
    return path


def test_simulate_writes_a_readable_trace(tmp_path):
    path = run_sim(tmp_path)
    text = path.read_text()
    assert text.startswith('{"format":"hlcmon-trace/1"')
    trace = read_trace(str(path))
    assert trace.config["n"] == 2
    assert trace.config["epsilon"] == 10
    assert trace.events


def test_simulate_stdout_and_determinism(tmp_path, capsys):
    assert main(["simulate", "--n", "2", "--steps", "50", "--seed", "1"]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", "--n", "2", "--steps", "50", "--seed", "1"]) == 0
    assert capsys.readouterr().out == first
    assert first.startswith('{"format":"hlcmon-trace/1"')


def test_detect_gamma_emits_detection_lines(tmp_path):
    trace = run_sim(tmp_path)
    out = tmp_path / "dets.jsonl"
    assert main(["detect-gamma", "--in", str(trace), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines
    for line in lines:
        det = json.loads(line)
        assert set(det) == {"start", "end", "contributing", "predicate"}
        assert det["predicate"] == "conj:v"
        l, c = det["start"]
        assert isinstance(l, int) and isinstance(c, int)


def test_detect_gamma_accepts_fractional_stretch(tmp_path):
    trace = run_sim(tmp_path)
    out = tmp_path / "dets.jsonl"
    assert main([
        "detect-gamma", "--in", str(trace), "--gamma-frac", "0.5", "--out", str(out),
    ]) == 0


def test_ground_truth_reports_witnesses(tmp_path):
    trace = run_sim(tmp_path)
    out = tmp_path / "truth.jsonl"
    assert main(["ground-truth", "--in", str(trace), "--out", str(out)]) == 0
    lines = [json.loads(ln) for ln in out.read_text().splitlines()]
    assert lines
    for snap in lines:
        assert set(snap) == {"times", "intervals", "point", "region"}
        assert len(snap["times"]) == 2
        assert set(snap["region"]) == {"start", "end"}


def test_ground_truth_rejects_unsupported_predicates(tmp_path, capsys):
    trace = run_sim(tmp_path)
    rc = main(["ground-truth", "--in", str(trace), "--predicate", "sum_lt:v:1"])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_two_layer_report_payload(tmp_path):
    trace = run_sim(tmp_path)
    out = tmp_path / "report.json"
    assert main([
        "two-layer", "--in", str(trace), "--score", "--out", str(out),
    ]) == 0
    payload = json.loads(out.read_text())
    assert payload["format"] == "hlcmon-report/1"
    assert payload["mode"] == "two_layer"
    assert payload["gamma"] == payload["epsilon"] == 10
    assert payload["total_windows"] >= payload["marked_windows"]
    assert payload["solver_calls"] == payload["marked_windows"]
    assert payload["layer1_ms"] == 0.0  # timing not requested
    for witness in payload["confirmed"]:
        assert set(witness) == {"window", "times", "values"}
    sc = payload["score"]
    assert set(sc) == {"tp", "fp", "fn", "precision", "recall"}
    assert sc["precision"] == 1.0


def test_two_layer_single_layer_mode(tmp_path):
    trace = run_sim(tmp_path)
    out = tmp_path / "report.json"
    assert main([
        "two-layer", "--in", str(trace), "--mode", "single_layer", "--out", str(out),
    ]) == 0
    payload = json.loads(out.read_text())
    assert payload["solver_calls"] == payload["total_windows"]


def test_emit_smt_writes_requested_windows(tmp_path, capsys):
    trace = run_sim(tmp_path)
    outdir = tmp_path / "smt"
    rc = main([
        "emit-smt", "--in", str(trace), "--outdir", str(outdir),
        "--window-index", "0", "--window-index", "2",
    ])
    assert rc == 0
    listed = capsys.readouterr().out.splitlines()
    assert listed == [str(outdir / "window_0.smt2"), str(outdir / "window_2.smt2")]
    text = (outdir / "window_0.smt2").read_text()
    assert text.startswith("(set-logic QF_LIA)\n")
    assert text.endswith("(check-sat)\n(get-model)\n")


def test_emit_smt_defaults_to_marked_windows(tmp_path, capsys):
    trace = run_sim(tmp_path)
    outdir = tmp_path / "smt"
    assert main(["emit-smt", "--in", str(trace), "--outdir", str(outdir)]) == 0
    listed = capsys.readouterr().out.splitlines()
    assert listed
    assert all(p.endswith(".smt2") for p in listed)


def test_emit_smt_rejects_out_of_range_indexes(tmp_path, capsys):
    trace = run_sim(tmp_path)
    rc = main([
        "emit-smt", "--in", str(trace), "--outdir", str(tmp_path / "smt"),
        "--window-index", "999",
    ])
    assert rc == 1
    assert "window index out of range: 999" in capsys.readouterr().err


def test_sweep_writes_metrics_csv(tmp_path):
    out = tmp_path / "metrics.csv"
    assert main([
        "sweep", "--n", "2", "--epsilon", "10", "--beta", "0.1",
        "--steps", "400", "--gamma-fracs", "0.5,1.0", "--out", str(out),
    ]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# hlcmon-metrics/1"
    assert lines[1].startswith("workload,n,epsilon,")
    rows = lines[2:]
    assert len(rows) == 2
    for row in rows:
        fields = row.split(",")
        assert len(fields) == 20
        assert fields[0] == "conjunctive"
        assert fields[1] == "2"


def test_sweep_covers_tdm(tmp_path):
    out = tmp_path / "metrics.csv"
    assert main([
        "sweep", "--workload", "tdm", "--n", "2", "--epsilon", "10",
        "--slot-length", "60", "--steps", "400", "--gamma-fracs", "1.0",
        "--out", str(out),
    ]) == 0
    rows = out.read_text().splitlines()[2:]
    assert len(rows) == 1
    assert rows[0].startswith("tdm,2,10,")


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_unreadable_trace_file_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not a trace\n")
    assert main(["detect-gamma", "--in", str(bad)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_missing_trace_file_exits_one(tmp_path, capsys):
    assert main(["detect-gamma", "--in", str(tmp_path / "absent.jsonl")]) == 1
    assert capsys.readouterr().err.startswith("error:")
