import json
import subprocess
import sys

import pytest

from cosmic.cli import main

TINY = {"name": "tiny", "waveform": {"K": 256, "N": 2, "K_z": 12, "mode": "symmetric"},
        "geometry": {"M": 2}, "scene": {"points": [{"x": 0.0, "y": 4.0}]}}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY))
    return p


@pytest.mark.parametrize("verb,artifact", [("generate", "waveforms.csv"), ("simulate", "raw.csv"),
                                           ("image", "image.pgm"), ("decode", "decode.json"),
                                           ("metrics", "metrics.json")])
def test_verbs_write_artifacts(verb, artifact, cfg_path, tmp_path, capsys):
    out = tmp_path / verb
    assert main([verb, "--config", str(cfg_path), "--out", str(out)]) == 0
    assert (out / artifact).exists() and (out / "manifest.json").exists()


def test_seed_flag_changes_output(cfg_path, tmp_path):
    main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--seed", "2"])
    main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "c"), "--seed", "1"])
    a, b, c = ((tmp_path / d / "waveforms.csv").read_bytes() for d in "abc")
    assert a == c and a != b


def test_check_reports_budget(capsys):
    assert main(["check", "--config", "large-array"]) == 2
    report = json.loads(capsys.readouterr().out)
    assert report["feasible"] is False and report["first_infeasible_antenna"] == 5
    assert main(["check", "--config", "desk-imaging"]) == 0


def test_infeasible_run_exits_2(tmp_path, capsys):
    assert main(["generate", "--config", "large-array", "--out", str(tmp_path)]) == 2
    assert "D_5=-14" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({**TINY, "extra": 1}))
    assert main(["metrics", "--config", str(p)]) == 2
    assert main(["metrics", "--config", str(tmp_path / "missing.json")]) == 2
    p.write_text("{not json")
    assert main(["metrics", "--config", str(p)]) == 2


def test_runtime_failure_exits_3(tmp_path, capsys):
    # feasible by the closed form, but the pilot prefix does not fit antenna 2
    d = {**TINY, "waveform": {"K": 64, "N": 2, "K_s": 8, "K_z": 3, "mode": "symmetric"},
         "channel": {"equalization": "pilot"}}
    p = tmp_path / "pilot.json"
    p.write_text(json.dumps(d))
    assert main(["metrics", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "pilots" in capsys.readouterr().err


def test_sweep_verb(cfg_path, tmp_path, capsys):
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", str(cfg_path), "--out", str(out), "--axis", "snr_db",
               "--values", "0", "5", "10", "15", "20", "25", "30",
               "--families", "cosmic", "ofdm", "zero_shift"])
    assert rc == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 22
    assert "21 sweep points" in capsys.readouterr().out


def test_sweep_bad_family_exits_2(cfg_path, tmp_path):
    assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path), "--axis", "N",
                 "--values", "1", "--families", "chirp"]) == 2


def test_console_entry_point(cfg_path):
    r = subprocess.run([sys.executable, "-m", "cosmic.cli", "check", "--config", str(cfg_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["feasible"]
