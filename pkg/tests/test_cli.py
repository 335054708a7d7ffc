import csv
import io
import json

import pytest

from bilex import curve as cv
from bilex.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_extend_identity(capsys):
    code, out, _ = run(capsys, "extend", "--curve", "identity", "--grid", "0:1:1,-1:1:1")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "y", "Fx", "Fy", "normDF", "normDFinv"]
    assert ["0", "-1", "0", "-2", "2", "1"] in rows
    assert ["1", "1", "1", "2", "2", "1"] in rows
    assert len(rows) == 1 + 4


def test_extend_affine(capsys):
    code, out, _ = run(capsys, "extend", "--curve", "affine", "--grid", "1:1:1,1:1:1")
    assert code == 0
    assert out.splitlines()[1] == "1,1,5,4,4,0.5"


def test_extend_curve_file(tmp_path, capsys):
    path = tmp_path / "bend.json"
    cv.dump_curve(cv.bend_curve(), path)
    out = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "extend", "--curve", str(path), "--grid", "-1:1:1,-1:1:1", "--out", str(out))
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 6


@pytest.mark.parametrize("argv", [
    ["extend", "--curve", "nope", "--grid", "0:1:1,0:1:1"],
    ["extend", "--curve", "identity", "--grid", "0:1"],
    ["extend", "--curve", "identity"],
    ["frobnicate"],
    ["verify", "--curve", "identity", "--suite", "nonsense"],
    ["audit", "--curve", "identity", "--samples", "0"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_invalid_curve_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"knots": [{"t": 0, "w": [0, 0]}, {"t": 1, "w": [0, 0]}],
                                "tail_neg": [1, 0], "tail_pos": [1, 0]}))
    code, _, err = run(capsys, "extend", "--curve", str(path), "--grid", "0:1:1,0:1:1")
    assert code == 2 and err


def test_audit_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["audit", "--curve", "bend", "--grid", "-2:2:0.5,-2:2:0.5", "--samples", "2000", "--seed", "5"]
    assert run(capsys, *argv, "--report", str(a))[0] == 0
    assert run(capsys, *argv, "--report", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    names = {c["name"] for c in rep["checks"]}
    assert {"lip1_DF", "lip1_DF_inv", "lip2", "example2"} <= names


def test_verify_constants(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "constants", "--curve", "identity")
    assert code == 0
    assert all(c["pass"] for c in json.loads(out)["checks"])


def test_verify_invariance(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "invariance", "--curve", "bend")
    assert code == 0


def test_verify_lemmas(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "lemmas", "--curve", "bend",
                       "--samples", "200", "--walks", "100000")
    rep = json.loads(out)
    assert code == 0
    angle2 = next(c for c in rep["checks"] if c["name"] == "angle2")
    assert angle2["details"]["stated_is_lower_bound"]
    assert not angle2["details"]["stated_within_3sigma"]


def test_failed_check_exit_code(capsys):
    code, _, err = run(capsys, "verify", "--suite", "invariance", "--curve", "bend", "--tol", "1e-30")
    assert code == 1
    assert "conjugation" in err


def test_export_grid(capsys):
    code, out, _ = run(capsys, "export-grid", "--curve", "bend", "--grid", "-1:1:1,-1:1:1")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "family,index,x,y,Fx,Fy"
    assert len(rows) == 1 + 3 * 31 + 3 * 31
