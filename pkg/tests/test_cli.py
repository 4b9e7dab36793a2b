import csv
import json
import math
import subprocess
import sys

import pytest
from scipy.stats import norm

from levysim.cli import main

BM_INI = """
[model]
family = BM
sigma = 1

[run]
T = 1
seed = 3
n = 200

[grid]
x = -2, 2, 9
h = 0.5, 2, 4
t = 0.5, 1, 2
"""


@pytest.fixture()
def bm_ini(tmp_path):
    path = tmp_path / "bm.ini"
    path.write_text(BM_INI)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_tabulate_cdf(bm_ini, tmp_path):
    out = tmp_path / "cdf.csv"
    assert main(["tabulate", "--config", str(bm_ini), "--target", "cdf_x", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["a", "value", "est_error"]
    assert len(rows) == 10
    for a, v, e in rows[1:]:
        assert abs(float(v) - norm.cdf(float(a))) < 1e-12
        assert float(e) <= 1e-12


@pytest.mark.parametrize("target,header", [
    ("pdf_x", ["a", "value", "est_error"]),
    ("cdf_sup", ["h", "value", "est_error"]),
    ("cdf_inf", ["h", "value", "est_error"]),
    ("joint", ["a", "h", "value", "est_error"]),
])
def test_tabulate_targets(bm_ini, tmp_path, target, header):
    out = tmp_path / f"{target}.csv"
    assert main(["tabulate", "--config", str(bm_ini), "--target", target, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == header and len(rows) > 1
    assert all(math.isfinite(float(v)) for row in rows[1:] for v in row)


def test_sample_deterministic(bm_ini, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sample", "--config", str(bm_ini), "--target", "x", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_rows(a)) == 201
    c = tmp_path / "c.csv"
    main(["sample", "--config", str(bm_ini), "--target", "x", "--out", str(c), "--seed", "4"])
    assert c.read_bytes() != a.read_bytes()


def test_sample_with_persisted_table(tmp_path):
    ini = tmp_path / "t.ini"
    ini.write_text(BM_INI + f"\n[table]\npath = {tmp_path / 'sup.levq'}\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sample", "--config", str(ini), "--target", "sup", "--out", str(a)]) == 0
    assert (tmp_path / "sup.levq").exists()
    assert main(["sample", "--config", str(ini), "--target", "sup", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # a stored table of another kind is a format error
    assert main(["sample", "--config", str(ini), "--target", "x", "--out", str(b)]) == 4


def test_validate(bm_ini, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["validate", "--config", str(bm_ini), "--target", "whf", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["suite"] == "whf"
    assert {c["name"] for c in rep["checks"]} == {"whf.factorization_identity", "whf.bm_closed_form"}


def test_exit_codes(bm_ini, tmp_path, capsys):
    assert main(["tabulate", "--config", str(bm_ini), "--target", "nope"]) == 2
    assert main(["validate", "--config", str(bm_ini), "--target", "nope"]) == 2
    assert main(["tabulate", "--config", str(tmp_path / "missing.ini"), "--target", "cdf_x"]) == 2
    bad = tmp_path / "bad.levq"
    bad.write_bytes(b"garbage")
    ini = tmp_path / "t.ini"
    ini.write_text(BM_INI + f"\n[table]\npath = {bad}\n")
    assert main(["sample", "--config", str(ini), "--target", "x", "--out", str(tmp_path / "o.csv")]) == 4
    assert "table error" in capsys.readouterr().err


def test_dump_config(bm_ini, capsys):
    assert main(["tabulate", "--config", str(bm_ini), "--target", "cdf_x", "--dump-config", "--n", "9"]) == 0
    text = capsys.readouterr().out
    assert "[model]" in text and "n = 9" in text


def test_console_script(bm_ini):
    res = subprocess.run([sys.executable, "-m", "levysim.cli", "tabulate", "--config", str(bm_ini),
                          "--target", "cdf_x"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "a,value,est_error"
