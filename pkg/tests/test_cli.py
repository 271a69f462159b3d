import json

import pytest

from bridgefactor.cli import main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bridge(capsys):
    code, out, _ = run(capsys, "bridge", "--n", "1030", "--k", "2")
    assert code == 0 and out.splitlines()[0] == "165"
    assert out.splitlines()[1].startswith("value 164.95")


def test_bridge_undefined(capsys):
    code, _, err = run(capsys, "bridge", "--n", "5", "--k", "2")
    assert code == 2 and "e" in err


def test_bridge_fit(capsys):
    code, out, _ = run(capsys, "bridge-fit", "--nmax", "500", "--step", "5")
    vals = dict(line.split() for line in out.splitlines())
    assert code == 0 and float(vals["slope"]) == pytest.approx(0.152, abs=0.01)


@pytest.mark.parametrize("argv,flag", [
    (["roc", "--m-grid", "5:200:5"], "--m-grid"),
    (["roc", "--m-grid", "a:b"], "--m-grid"),
    (["consistency", "--case", "normal-two", "--n-grid", "5,6", "--reps", "2"], "grid"),
    (["consistency", "--reps", "0", "--n-grid", "10"], "reps"),
    (["concrete", "--data", "/nonexistent/file.csv"], "--data"),
    (["exp-sweep", "--beta-grid", "0:0.3:0.1"], "--beta-grid"),
    (["bridge", "--n", "10", "--bogus"], "bogus"),
    (["consistency", "--seed", "-3", "--n-grid", "10"], "--seed"),
])
def test_flag_errors_exit_2(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert flag in err


def test_consistency_byte_identical(tmp_path, capsys):
    args = ["consistency", "--case", "normal-known", "--n-min", "5", "--n-max", "60", "--step", "5",
            "--reps", "20", "--theta", "0.25", "--seed", "7", "--splits", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a), "--threads", "1"]) == 0
    assert main(args + ["--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# ") and json.loads(lines[0][2:])["config"]["seed"] == 7
    assert lines[1].startswith("n,m,")
    assert b"\r" not in a.read_bytes()


def test_env_seed(monkeypatch, tmp_path):
    monkeypatch.setenv("BRIDGEFACTOR_SEED", "11")
    out = tmp_path / "x.json"
    assert main(["consistency", "--n-grid", "10,20", "--reps", "3", "--splits", "2",
                 "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["seed"] == 11 and len(doc["rows"]) == 2 and "version" in doc


def test_roc_and_sweep(tmp_path, capsys):
    code, out, err = run(capsys, "roc", "--n", "30", "--m-grid", "5,10,20", "--reps", "20")
    assert code == 0 and "AUC" in err and out.count("\n") == 6
    code, out, err = run(capsys, "exp-sweep", "--beta-grid", "0.1:0.3:0.05", "--n", "30", "--reps", "10",
                         "--splits", "5")
    assert code == 0 and "interval" in err


def test_criteria_and_concrete(tmp_path, capsys):
    code, out, _ = run(capsys, "criteria", "--case", "normal-unknown", "--n-grid", "20,40", "--reps", "5",
                       "--splits", "3")
    assert code == 0 and "aibf_mean" in out
    src = tmp_path / "copy.csv"
    from bridgefactor.concrete import bundled_synthetic_path
    src.write_bytes(bundled_synthetic_path().read_bytes())
    before = src.read_bytes()
    res = tmp_path / "res.csv"
    code, out, err = run(capsys, "concrete", "--data", str(src), "--has-header", "--m-grid", "50,100",
                         "--splits", "5", "--residuals-out", str(res))
    assert code == 0 and "165" in err
    assert src.read_bytes() == before
    assert res.read_text().count("\n") > 1000


@pytest.mark.parametrize("text,kind,expected", [
    ("5:95:5", int, list(range(5, 96, 5))),
    ("50,100,200", int, [50, 100, 200]),
    ("0.1:0.3:0.1", float, [0.1, 0.2, 0.3]),
    ("7", int, [7]),
])
def test_parse_grid(text, kind, expected):
    assert parse_grid(text, kind) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["", "1:2", "5:1:1", "1:5:0", "1.5,2"])
def test_parse_grid_errors(text):
    with pytest.raises(ValueError):
        parse_grid(text, int)
