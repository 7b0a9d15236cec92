import hashlib
import json
from pathlib import Path

import pytest

from ghostguide.cli import main
from ghostguide.melody import builtin_melody, serialize_melody

GOLDEN = Path(__file__).parent / "golden" / "summary_seed42_n4.sha256"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["simulate", "--participants", "4", "--seed", "42", "--out", str(out), "--workers", "1"]) == 0
    return out


def test_print_config(capsys):
    assert main(["--print-config"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["controller"]["alpha_min"] == 0.08


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"controller": {"mode": "dynamic", "static_alpha": 0.3}}))
    src = tmp_path / "e.csv"
    src.write_text("t_ms,E\n0,1\n")
    assert main(["--config", str(cfg), "control", "--input", str(src), "--mode", "static"]) == 0
    assert capsys.readouterr().out.splitlines()[1].endswith(",0.3,0.3")
    assert main(["--config", str(cfg), "control", "--input", str(src)]) == 0
    assert capsys.readouterr().out.splitlines()[1].endswith(",0.8,0.8")


def test_usage_errors(capsys):
    assert main(["bogus"]) == 1
    assert main(["score", "--melody"]) == 1
    assert main([]) == 1
    assert main(["simulate", "--participants", "0", "--out", "x"]) == 1


def test_help_mentions_every_flag(capsys):
    assert main(["simulate", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--participants", "--seed", "--out", "--workers", "--config"):
        assert flag in text


def test_control_csv(tmp_path, capsys):
    src = tmp_path / "e.csv"
    src.write_text("t_ms,E\n0,1\n33.3,0\n66.7,0\n")
    assert main(["control", "--input", str(src), "--mode", "static"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t_ms,E,e_hat,alpha_raw,alpha"
    assert all(line.endswith(",0.5,0.5") for line in lines[1:])


def test_control_rejects_bad_rows(tmp_path, capsys):
    src = tmp_path / "e.csv"
    src.write_text("t_ms,E\n0,1.5\n")
    assert main(["control", "--input", str(src)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_score_perfect(tmp_path, capsys):
    m = builtin_melody("melody_b")
    (tmp_path / "m.json").write_text(serialize_melody(m))
    events = [{"pitch": n.pitch, "onset_ms": n.onset_ms, "duration_ms": n.duration_ms, "finger": int(n.finger)}
              for n in m.notes]
    (tmp_path / "e.json").write_text(json.dumps(events))
    assert main(["score", "--melody", str(tmp_path / "m.json"), "--events", str(tmp_path / "e.json")]) == 0
    out = capsys.readouterr().out
    assert "error_rate 0.000000" in out and "pitch_acc 1.000000" in out


def test_score_bad_melody(tmp_path, capsys):
    (tmp_path / "m.json").write_text('{"id": "x"}')
    (tmp_path / "e.json").write_text("[]")
    assert main(["score", "--melody", str(tmp_path / "m.json"), "--events", str(tmp_path / "e.json")]) == 2
    assert "bpm" in capsys.readouterr().err


def test_validate_and_corrupt(corpus, tmp_path, capsys):
    good = next((corpus / "logs" / "P01").glob("*ImmediateTest*"))
    assert main(["validate", "--log", str(good)]) == 0
    doc = json.loads(good.read_text())
    doc["events"][0]["onset_ms"] = "soon"
    bad = tmp_path / "bad.log.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--log", str(bad)]) == 2
    assert "events[0].onset_ms" in capsys.readouterr().err


def test_compress(corpus, tmp_path, capsys):
    with_motion = next(p for p in (corpus / "logs").rglob("*Test*") if '"motion":[{' in p.read_text())
    out = tmp_path / "c.log.json"
    assert main(["compress", "--motion", str(with_motion), "--pos-thresh", "0.002", "--rot-thresh", "0.02",
                 "--out", str(out)]) == 0
    report = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(report["max_pos_error_m"]) <= 0.002 and float(report["max_rot_error_rad"]) <= 0.02
    assert int(report["keys"]) < int(report["samples"])
    assert main(["validate", "--log", str(out)]) == 0


def test_analyze_golden_summary(corpus, tmp_path, capsys):
    out = tmp_path / "report"
    assert main(["analyze", "--corpus", str(corpus), "--out", str(out), "--gnuplot"]) == 0
    for name in ("learning_curves.csv", "retention.csv", "slopes.csv", "block_switch.csv", "similarity.csv",
                 "summary.txt"):
        assert (out / name).stat().st_size > 0
    digest = hashlib.sha256((out / "summary.txt").read_bytes()).hexdigest()
    assert digest == GOLDEN.read_text().split()[0]


def test_analyze_detects_tampering(corpus, tmp_path, capsys):
    import shutil
    copy = tmp_path / "copy"
    shutil.copytree(corpus, copy)
    victim = next((copy / "logs" / "P02").glob("*Training*"))
    victim.write_text(victim.read_text().replace('"index":', '"index": ', 1))
    assert main(["analyze", "--corpus", str(copy), "--out", str(tmp_path / "r"), "--no-similarity"]) == 2
    assert "hash mismatch" in capsys.readouterr().err


def test_missing_corpus(tmp_path, capsys):
    assert main(["analyze", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path / "r")]) == 2
