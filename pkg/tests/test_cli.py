import json

import pytest

from tslforge.cli import main
from tslforge.corpus import CORPUS_DIR

ALTERNATOR = "ALWAYS GUARANTEE { F [o <- a()]; F [o <- b()]; }\n"
CONFLICT = "ALWAYS GUARANTEE { [o <- a()]; [o <- b()]; }\n"


@pytest.fixture
def spec_file(tmp_path):
    def make(text, name="spec.tsl"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return make


def test_check_sensor(capsys):
    assert main(["check", "--json", str(CORPUS_DIR / "sensor.tsl")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["outputs"] == ["partControl"]
    assert len(doc["predicates"]) == 3


def test_check_ledmatrix_cells(capsys):
    assert main(["check", "--json", str(CORPUS_DIR / "ledmatrix.tsl")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert {"coord_x", "coord_y", "waitcounter"} <= set(doc["cells"])


def test_missing_file(capsys):
    assert main(["check", "/nonexistent/spec.tsl"]) == 2
    assert "nonexistent" in capsys.readouterr().err


def test_parse_error_exit(spec_file, capsys):
    assert main(["check", spec_file("ALWAYS GUARANTEE { [o <- ; }")]) == 2
    assert "spec.tsl:1:" in capsys.readouterr().err


def test_encode_error_exit(spec_file):
    assert main(["encode", spec_file("OUTPUTS { o } ALWAYS GUARANTEE { p x; }")]) == 3


@pytest.mark.parametrize(
    "text, counts",
    [
        ("ALWAYS GUARANTEE { [o <- a()]; }", "guarantees: L=1 T=0"),
        ("ALWAYS GUARANTEE { F [o <- a()]; }", "guarantees: L=0 T=1"),
    ],
)
def test_stats(spec_file, capsys, text, counts):
    assert main(["stats", spec_file(text)]) == 0
    assert counts in capsys.readouterr().out


def test_encode_json(spec_file, capsys):
    assert main(["encode", "--format", "json", spec_file(ALTERNATOR)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["controllable"] == ["u0", "u1", "u2"]
    assert doc["uncontrollable"] == []


def test_encode_hoa(spec_file, capsys):
    assert main(["encode", "--format", "hoa", spec_file(ALTERNATOR)]) == 0
    assert capsys.readouterr().out.startswith("HOA: v1")


def test_synthesize_and_emit(spec_file, tmp_path, capsys):
    out = tmp_path / "m.json"
    assert main(["synthesize", spec_file(ALTERNATOR), "--emit-machine", str(out)]) == 0
    assert "minimal bound 2" in capsys.readouterr().out
    assert json.loads(out.read_text())["states"] == 2


def test_unrealizable_exit(spec_file):
    assert main(["synthesize", spec_file(CONFLICT), "--max-bound", "2"]) == 5


def test_unknown_exit_is_honest(capsys):
    code = main(["synthesize", str(CORPUS_DIR / "ledmatrix.tsl"), "--max-bound", "1"])
    assert code == 4
    assert "unknown" in capsys.readouterr().out


def test_pipeline_writes_artifacts(spec_file, tmp_path):
    interp = tmp_path / "alt.fun"
    interp.write_text("fun a() = 1; fun b() = 2;\n")
    out = tmp_path / "out"
    code = main(["pipeline", spec_file(ALTERNATOR), "--interp", str(interp),
                 "--steps", "20", "--out-dir", str(out)])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"encoding.json", "machine.json", "cfa.json", "trace.jsonl",
            "verdicts.json", "report.txt"} <= names
    verdicts = json.loads((out / "verdicts.json").read_text())
    assert "Violated" not in json.dumps(verdicts)


def test_pipeline_unrealizable_writes_certificate(spec_file, tmp_path):
    out = tmp_path / "out"
    assert main(["pipeline", spec_file(CONFLICT), "--max-bound", "2", "--out-dir", str(out)]) == 5
    assert (out / "counter_machine.json").exists()


def test_cfa_simulate_monitor_chain(spec_file, tmp_path):
    spec = spec_file(ALTERNATOR)
    cfa = tmp_path / "cfa.json"
    trace = tmp_path / "trace.jsonl"
    interp = tmp_path / "alt.fun"
    interp.write_text("fun a() = 1; fun b() = 2;\n")
    assert main(["cfa", spec, "-o", str(cfa)]) == 0
    assert main(["simulate", str(cfa), "--interp", str(interp), "--steps", "10", "-o", str(trace)]) == 0
    assert len(trace.read_text().splitlines()) == 11
    assert main(["monitor", spec, str(trace), "--interp", str(interp)]) == 0


def test_monitor_reports_violation(spec_file, tmp_path):
    spec = spec_file("ALWAYS GUARANTEE { [o <- a()]; }")
    trace = tmp_path / "bad.jsonl"
    trace.write_text(
        '{"initial": {"o": 0}}\n'
        '{"step": 0, "state": 0, "inputs": {}, "updates": {"o": "b()"}, "values": {"o": 2}}\n'
    )
    interp = tmp_path / "i.fun"
    interp.write_text("fun a() = 1; fun b() = 2;\n")
    assert main(["monitor", spec, str(trace), "--interp", str(interp)]) == 6


def test_simulate_rejects_bad_cfa(tmp_path):
    bad = tmp_path / "cfa.json"
    bad.write_text('{"control_states": 1}')
    assert main(["simulate", str(bad)]) == 2


def test_cli_output_is_deterministic(spec_file, tmp_path):
    spec = spec_file(ALTERNATOR)
    texts = []
    for run in ("a", "b"):
        out = tmp_path / run
        main(["pipeline", spec, "--steps", "30", "--seed", "3", "--out-dir", str(out)])
        texts.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert texts[0] == texts[1]
