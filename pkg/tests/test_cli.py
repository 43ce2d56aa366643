import json

import numpy as np
import pytest

from loccforge.cli import main
from loccforge.io import measurement_digest, parse_protocol, serialize_measurement
from loccforge.measurement import measurement_from_parts

from conftest import FIXTURE_DIR, load_fixture


def fx(name):
    return str(FIXTURE_DIR / f"{name}.json")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_ok(capsys):
    code, out, err = run(capsys, "validate", fx("cascade5"))
    assert code == 0
    assert "verdict: ok" in out and err == ""


def test_validate_json_payload(capsys):
    code, out, _ = run(capsys, "validate", fx("cascade5"), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["ok"] and payload["complete"]
    assert payload["operators"] == 5
    assert payload["diagnostics"] == []
    assert payload["completeness_residual"] <= 1e-8


def test_validate_incomplete_rejected(capsys):
    code, out, _ = run(capsys, "validate", fx("fourparty_mismatch"),
                       "--format", "json")
    assert code == 1
    payload = json.loads(out)
    assert payload["diagnostics"] == [] and not payload["complete"]


def test_validate_structural_reject(tmp_path, capsys):
    bad = measurement_from_parts(
        [[np.diag([1.0, -0.3]), np.eye(2)], [np.eye(2), np.eye(2)]])
    p = tmp_path / "bad.json"
    p.write_text(serialize_measurement(bad))
    code, out, _ = run(capsys, "validate", str(p), "--format", "json")
    assert code == 1
    payload = json.loads(out)
    assert any(d["kind"] == "not-psd" for d in payload["diagnostics"])


def test_validate_missing_file(capsys):
    code, _, err = run(capsys, "validate", "/nonexistent/m.json")
    assert code == 1 and "error:" in err


def test_check_nogo_witness(capsys):
    code, out, _ = run(capsys, "check-nogo", fx("domino9"), "--format", "json")
    assert code == 2
    payload = json.loads(out)
    assert payload["witness"]
    assert payload["singular_pair"]["op_index"] == 0
    assert payload["singular_pair"]["label"] == "M1"
    assert payload["partition"]["s1"] == [0]
    assert payload["partition"]["exhaustive"]


def test_check_nogo_clean(capsys):
    code, out, _ = run(capsys, "check-nogo", fx("productbasis4"))
    assert code == 0
    assert "no-witness" in out


def test_check_nogo_partial_scan_flag(capsys):
    code, out, _ = run(capsys, "check-nogo", fx("domino9"),
                       "--max-exhaustive", "4", "--format", "json")
    assert code == 2
    payload = json.loads(out)
    assert payload["partition"]["exhaustive"] is False


def test_synthesize_protocol(capsys):
    code, out, _ = run(capsys, "synthesize", fx("cascade5"),
                       "--rounds", "4", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["verdict"] == "Protocol"
    assert payload["stats"]["rounds"] == 4
    assert payload["leaves"] == 5
    assert payload["weight_residual"] <= 1e-8
    assert set(payload["weights"]) == {f"M{j}" for j in range(1, 6)}
    assert all(abs(w - 1.0) < 1e-9 for w in payload["weights"].values())
    assert payload["orderings"][-1] == ["B", "A", "B", "A"]


def test_synthesize_impossible(capsys):
    code, out, _ = run(capsys, "synthesize", fx("domino9"), "--format", "json")
    assert code == 2
    payload = json.loads(out)
    assert payload["verdict"] == "ProvedImpossible"
    assert payload["leaves"] is None


def test_synthesize_budget(capsys):
    code, out, _ = run(capsys, "synthesize", fx("cascade5"), "--rounds", "1",
                       "--format", "json")
    assert code == 3
    assert json.loads(out)["verdict"] == "BudgetExhausted"


def test_synthesize_exhaustive(capsys):
    code, out, _ = run(capsys, "synthesize", fx("productbasis4"),
                       "--exhaustive", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["alternates"] == 1
    assert payload["orderings"] == [["A", "B"], ["B", "A"]]


def test_synthesize_save_dot_and_lift(tmp_path, capsys):
    proto = tmp_path / "proto.json"
    dot = tmp_path / "proto.dot"
    code, out, _ = run(capsys, "synthesize", fx("krausdemo"),
                       "--save", str(proto), "--dot", str(dot))
    assert code == 0
    assert proto.exists() and dot.exists()
    assert dot.read_text().startswith("digraph protocol {")
    doc = parse_protocol(proto.read_text())
    assert doc.measurement_digest == measurement_digest(load_fixture("krausdemo"))

    code, out, _ = run(capsys, "lift", fx("krausdemo"),
                       "--protocol", str(proto), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["extra_round"] is True
    by_label = {t["label"]: t for t in payload["tails"]}
    assert by_label["M1"]["coin_round"]
    probs = sorted(e["probability"] for e in by_label["M1"]["entries"])
    assert np.allclose(probs, [0.5, 0.5])


def test_lift_digest_mismatch(tmp_path, capsys):
    proto = tmp_path / "proto.json"
    code, _, _ = run(capsys, "synthesize", fx("krausdemo"), "--save", str(proto))
    assert code == 0
    code, _, err = run(capsys, "lift", fx("cascade5"), "--protocol", str(proto))
    assert code == 1
    assert "different measurement" in err


def test_lift_rejects_protocol_without_tree(tmp_path, capsys):
    proto = tmp_path / "none.json"
    code, _, _ = run(capsys, "synthesize", fx("domino9"), "--save", str(proto))
    assert code == 2
    code, _, err = run(capsys, "lift", fx("domino9"), "--protocol", str(proto))
    assert code == 1
    assert "no tree" in err


def test_config_file_flag(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rounds": 1}))
    code, out, _ = run(capsys, "synthesize", fx("cascade5"),
                       "--config", str(cfg), "--format", "json")
    assert code == 3
    # explicit flags beat the file
    code, out, _ = run(capsys, "synthesize", fx("cascade5"),
                       "--config", str(cfg), "--rounds", "4")
    assert code == 0


def test_config_env_var(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rounds": 1}))
    monkeypatch.setenv("LOCCFORGE_CONFIG", str(cfg))
    code, out, _ = run(capsys, "synthesize", fx("cascade5"), "--format", "json")
    assert code == 3
    assert json.loads(out)["verdict"] == "BudgetExhausted"


def test_bad_config_reports_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_key": 1}))
    code, _, err = run(capsys, "synthesize", fx("cascade5"), "--config", str(cfg))
    assert code == 1 and "unknown config keys" in err


def test_byte_determinism_over_commands(capsys):
    for argv in [
        ("validate", fx("cascade5"), "--format", "json"),
        ("check-nogo", fx("domino9"), "--format", "json"),
        ("synthesize", fx("productbasis4"), "--format", "json"),
    ]:
        c1, o1, _ = run(capsys, *argv)
        c2, o2, _ = run(capsys, *argv)
        assert c1 == c2 and o1 == o2
