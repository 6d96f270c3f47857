import json

from dropshape.cli import main


def test_perim_happy_path(tmp_path, capsys):
    shape = tmp_path / "disk.json"
    shape.write_text(json.dumps({"center": [0, 0], "r0": 1.0, "modes": []}))
    kernel = tmp_path / "exp.json"
    kernel.write_text(json.dumps({"family": "exponential"}))
    out = tmp_path / "rep.json"
    code = main(["perim", "--shape", str(shape), "--kernel", str(kernel), "--eps", "0.1",
                 "--method", "slicing", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert 0 < rep["per_nonlocal"] < rep["per_local"]
    assert "Per_eps" in capsys.readouterr().out


def test_validation_exit_code(capsys):
    assert main(["perim", "--eps", "-1"]) == 2
    assert "epsilon must be positive" in capsys.readouterr().err


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_energy_batch(tmp_path):
    batch = tmp_path / "jobs.json"
    batch.write_text(json.dumps([
        {"shape": "disk", "kernel": "exponential", "eps": 0.1, "gamma": 0.5},
        {"shape": "peanut", "kernel": "gaussian", "eps": 0.2, "gamma": 0.3, "method": "polar"},
    ]))
    out = tmp_path / "out.json"
    assert main(["energy", "--batch", str(batch), "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 2 and rows[1]["method"] == "polar"


def test_oned_check(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oned-check", "--count", "5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["max_error"] <= 1e-6


def test_sweep_rows(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--gamma", "0.5", "--eps", "0.3,0.2", "--inits", "2", "--K", "3",
                 "--max-iters", "2", "--out", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 4


def test_bad_shape_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"center": [0, 0], "r0": 1.0, "modes": [[2, 1.5, 0.0]]}))
    assert main(["perim", "--shape", str(bad)]) == 2
