import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from photocount import FptLaw
from photocount import analytic_fpt as af
from photocount.cli import main
from photocount.io import read_train_csv


def read_table(path):
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    header = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if ln and not ln.startswith("#")))
    return header, rows[0], np.array(rows[1:], dtype=float)


def test_analytic(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["analytic", "--em", "1", "--is", "1", "--sigma", "1", "--tmax", "5", "--points", "500", "--out", str(out)]) == 0
    header, names, data = read_table(out)
    assert names == ["t", "cdf", "pdf"] and data.shape == (500, 3)
    assert data[-1, 0] == 5.0
    assert data[-1, 1] == pytest.approx(af.cdf(FptLaw(1, 1, 1), 5.0), rel=1e-15)
    assert header[0] == "# photocount analytic"
    assert json.loads(header[2].split(": ", 1)[1])["points"] == 500


def test_csv_dialect(tmp_path):
    out = tmp_path / "a.csv"
    main(["analytic", "--points", "3", "--out", str(out)])
    raw = out.read_bytes()
    assert b"\r" not in raw and b";" not in raw


def test_sample_fpt_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "x.csv", tmp_path / "y.csv"]
    for p in paths:
        assert main(["sample-fpt", "--em", "1", "--is", "1", "--sigma", "1", "--n", "1000", "--seed", "42", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert set(summary) == {"estimate", "std_error", "n"} and summary["n"] == 1000


def test_header_records_seed(tmp_path):
    out = tmp_path / "x.csv"
    main(["sample-fpt", "--n", "10", "--seed", "9", "--out", str(out)])
    header, _, _ = read_table(out)
    assert header[1] == "# seed: 9"
    assert json.loads(header[2].split(": ", 1)[1])["seed"] == 9


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"em": 2.0, "is": 1.0, "points": 4}))
    out = tmp_path / "a.csv"
    assert main(["analytic", "--config", str(cfg), "--points", "2", "--out", str(out)]) == 0
    header, _, data = read_table(out)
    recorded = json.loads(header[2].split(": ", 1)[1])
    assert recorded["em"] == 2.0 and recorded["points"] == 2 and len(data) == 2


@pytest.mark.parametrize(
    "argv, field",
    [
        (["analytic", "--em", "-1"], "em"),
        (["sample-fpt", "--n", "0"], "n"),
        (["detect", "--step", "5", "--horizon", "20"], "step"),
        (["detect", "--signal", '{"kind": "piecewise", "breakpoints": [1], "levels": [1, -2]}'], "signal.levels[1]"),
        (["coincide", "--rho", "1.5"], "rho"),
    ],
)
def test_schema_violation_exit_2(argv, field, capsys):
    assert main(argv) == 2
    assert f"at {field}:" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"threshold": 1.0}))
    assert main(["analytic", "--config", str(cfg)]) == 2
    assert "threshold" in capsys.readouterr().err


def test_peclet_exit_3(tmp_path, capsys):
    assert main(["pde", "--sigma", "0.05", "--n-cells", "64", "--dt", "0.01", "--out", str(tmp_path / "p.csv")]) == 3
    assert "Peclet" in capsys.readouterr().err


def test_pde_output(tmp_path):
    out, cdf_out = tmp_path / "p.csv", tmp_path / "c.csv"
    argv = ["pde", "--n-cells", "256", "--dt", "0.01", "--tmax", "1", "--rows", "5"]
    assert main(argv + ["--out", str(out), "--cdf-out", str(cdf_out)]) == 0
    _, names, data = read_table(out)
    assert names == ["t", "E", "rho"]
    assert np.all(data[data[:, 1] == 1.0, 2] == 0.0)
    _, _, cdf = read_table(cdf_out)
    assert np.max(np.abs(cdf[:, 1] - cdf[:, 2])) < 1e-2


def test_detect_roundtrip(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["detect", "--is", "2", "--sigma", "0.000001", "--horizon", "100", "--out", str(out)]) == 0
    tr = read_train_csv(str(out), 100.0)
    assert abs(len(tr) - 200) <= 1
    rec = json.loads(capsys.readouterr().out)
    assert rec["n"] == len(tr)


def test_detect_json(tmp_path):
    out = tmp_path / "d.json"
    assert main(["detect", "--horizon", "20", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["horizon"] == 20.0 and doc["config"]["signal"]["kind"] == "constant"


def test_coincide(tmp_path, capsys):
    argv = ["coincide", "--horizon", "500", "--seed", "3"]
    files = ["--out", str(tmp_path / "a.csv"), "--out2", str(tmp_path / "b.csv"), "--paths-out", str(tmp_path / "p.csv")]
    assert main(argv + files) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["valid"] and rec["coincidence"]["n"] > 0
    _, names, _ = read_table(tmp_path / "p.csv")
    assert names == ["t", "I1", "I2"]


def test_verify_quick_table():
    proc = subprocess.run(
        [sys.executable, "-m", "photocount.cli", "verify", "--quick"], capture_output=True, text=True, timeout=600
    )
    lines = proc.stdout.strip().splitlines()
    rows = [ln for ln in lines[1:-1]]
    assert len(rows) == 9
    numbers = [int(r.split()[0]) for r in rows]
    assert numbers == list(range(1, 10))
    assert all(r.split()[1] in ("PASS", "FAIL") for r in rows)
    assert proc.returncode == (0 if all(r.split()[1] == "PASS" for r in rows) else 1)


def test_console_script():
    proc = subprocess.run(["photocount", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("analytic", "pde", "sample-fpt", "detect", "coincide", "verify"):
        assert cmd in proc.stdout
