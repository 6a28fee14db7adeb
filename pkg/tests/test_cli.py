import csv
import json
import subprocess
import sys

import pytest

from ephsim.cli import main, parse_phase, read_config_file
from ephsim.franson import read_scan_csv


def test_parse_phase_presets():
    assert parse_phase("0") == 0.0
    assert parse_phase("pi_2") == pytest.approx(1.5707963267948966)
    assert parse_phase("0.25") == 0.25


@pytest.mark.parametrize("which", ["eq1", "eq2", "hom", "negative-image"])
def test_eq_check_passes(which, capsys):
    assert main(["eq-check", which]) == 0
    assert "PASS" in capsys.readouterr().out


def test_franson_scan_writes_csv(tmp_path, capsys):
    code = main(["franson-scan", "--phi2", "pi_2", "--gamma", "0.9", "--steps", "9", "--seed", "4", "--out", str(tmp_path)])
    assert code == 0
    records = read_scan_csv(tmp_path / "scan_phi2_pi_2.csv")
    assert len(records) == 9
    assert records[0].phi2 == pytest.approx(1.5707963267948966)
    assert records[-1].phi1 == pytest.approx(6.283185307179586)


def test_franson_scan_workers_do_not_change_output(tmp_path):
    args = ["franson-scan", "--steps", "13", "--seed", "21"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--workers", "4", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "scan_phi2_0.csv").read_bytes() == (tmp_path / "b" / "scan_phi2_0.csv").read_bytes()


def test_amplitudes_subcommand(tmp_path):
    code = main(["amplitudes", "--scenario", "eph-et", "--background", "coherent:0.3", "--bins", "16", "--tau0-bins", "4", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.reader((tmp_path / "eph-et_a1c2.csv").open(encoding="utf-8")))
    assert rows[0] == ["index", "re", "im", "abs"]
    assert all(float(r[3]) == 0.0 for r in rows[1:])
    assert (tmp_path / "eph-et_a12.csv").exists()


def test_bell_test_subcommand(tmp_path, capsys):
    main(["franson-scan", "--steps", "25", "--gamma", "0.861", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["bell-test", "--from", str(tmp_path / "scan_phi2_0.csv"), "--out", str(tmp_path / "r")]) == 0
    assert "VIOLATION" in capsys.readouterr().out
    assert (tmp_path / "r" / "report.json").exists()


def test_fig4_subcommand(tmp_path, capsys):
    assert main(["fig4", "--seed", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("VIOLATION") == 2
    payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert payload["seed"] == 1


def test_config_file_defaults_and_override(tmp_path):
    cfg = tmp_path / "scan.cfg"
    cfg.write_text("# scan defaults\nsteps = 7\nseed = 3\nphi2 = pi_2\ngamma: 0.5\npolarization-free = yes\n", encoding="utf-8")
    assert read_config_file(cfg)["gamma"] == "0.5"
    main(["franson-scan", "--config", str(cfg), "--out", str(tmp_path / "a")])
    records = read_scan_csv(tmp_path / "a" / "scan_phi2_pi_2.csv")
    assert len(records) == 7
    main(["franson-scan", "--config", str(cfg), "--steps", "5", "--out", str(tmp_path / "b")])
    assert len(read_scan_csv(tmp_path / "b" / "scan_phi2_pi_2.csv")) == 5


def test_config_file_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n", encoding="utf-8")
    with pytest.raises(SystemExit):
        main(["franson-scan", "--config", str(cfg)])


def test_config_file_syntax_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("steps 5\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_config_file(cfg)


def test_bad_input_returns_error_code(tmp_path):
    assert main(["bell-test", "--from", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ephsim", "eq-check", "hom"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "hom" in proc.stdout
