import csv
import json
import math

import numpy as np
import pytest

from make_golden import COMMANDS, DATA, run
from magkit.cli import main


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def read_json(path):
    with open(path) as fh:
        data = json.load(fh)
    data.pop("seconds", None)
    return data


def close(a, b, rtol=1e-12):
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k], rtol) for k in a)
    if isinstance(a, list):
        return len(a) == len(b) and all(close(x, y, rtol) for x, y in zip(a, b))
    if isinstance(a, float) or isinstance(b, float):
        return a is not None and b is not None and math.isclose(a, b, rel_tol=rtol, abs_tol=1e-300)
    return a == b


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_golden(name, tmp_path):
    assert run(name, tmp_path) == 0
    got, want = tmp_path / name, DATA / "golden" / name
    if name.endswith(".csv"):
        hg, g = read_csv(got)
        hw, w = read_csv(want)
        assert hg == hw
        np.testing.assert_allclose(g, w, rtol=1e-12, atol=0)
    else:
        assert close(read_json(got), read_json(want))


@pytest.mark.parametrize("name", ["outlier.json", "outlier_eval.json", "al.csv", "weight.csv"])
def test_byte_identical_reruns(name, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert run(name, tmp_path / "a") == 0 and run(name, tmp_path / "b") == 0
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_weight_rows_sum_to_magnitude(tmp_path):
    run("weight.csv", tmp_path)
    run("weight.json", tmp_path)
    header, rows = read_csv(tmp_path / "weight.csv")
    assert header == ["index", "weight"]
    assert rows[:, 0].tolist() == list(range(60))
    mag = json.loads((tmp_path / "weight.json").read_text())["magnitude"]
    assert rows[:, 1].sum() == pytest.approx(mag, rel=1e-13)
    x = np.linspace(0, 6, 60)
    assert mag == pytest.approx(1 + np.tanh(np.diff(x) / 2).sum(), rel=1e-10)


def test_floats_round_trip(tmp_path):
    run("weight.csv", tmp_path)
    run("weight.json", tmp_path)
    _, rows = read_csv(tmp_path / "weight.csv")
    w = json.loads((tmp_path / "weight.json").read_text())["weights"]
    assert rows[:, 1].tolist() == w


def test_json_schema_and_grid(tmp_path):
    run("outlier_eval.json", tmp_path)
    data = json.loads((tmp_path / "outlier_eval.json").read_text())
    assert data["schema"] == 1
    assert len(data["t_search"]["grid"]) == 14
    assert set(data["metrics"]) == {"auc", "f1_at_k", "k", "precision_at_k", "recall_at_k"}
    assert data["sizes"]["train"] == 300


def test_disconnected_graph(tmp_path, capsys):
    code = main(["graph-weight", "--edges", str(DATA / "disconnected.txt"), "--out", str(tmp_path / "g.csv")])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "DisconnectedGraphError" and "[0, 1, 2]" in err["message"] and "[3, 4]" in err["message"]
    assert not (tmp_path / "g.csv").exists()


def test_numerical_failure_exit(tmp_path, capsys):
    code = main(["graph-weight", "--edges", str(DATA / "er.txt"), "--metric", "shortest_path", "--t", "1",
                 "--out", str(tmp_path / "g.csv")])
    assert code == 3
    assert "try t >" in json.loads(capsys.readouterr().err)["message"]


def test_usage_errors(capsys):
    assert main(["nope"]) == 1
    assert main(["weight", "--input", "x.csv"]) == 1
    assert main(["outlier", "--inliers", "x.csv", "--t-grid", "a,b", "--out", "o.json"]) in (1, 2)
    for line in capsys.readouterr().err.strip().splitlines():
        assert json.loads(line)["exit"] in (1, 2)


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n3\n")
    assert main(["weight", "--input", str(bad), "--out", str(tmp_path / "w.csv")]) == 2
    assert main(["weight", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "w.csv")]) == 2
    dup = tmp_path / "dup.csv"
    dup.write_text("0\n1\n0\n")
    assert main(["weight", "--input", str(dup), "--out", str(tmp_path / "w.csv")]) == 3
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 3 and all(json.loads(l)["message"] for l in lines)


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MAGKIT_THREADS", "2")
    assert run("magfn.csv", tmp_path) == 0
    _, a = read_csv(tmp_path / "magfn.csv")
    _, b = read_csv(DATA / "golden" / "magfn.csv")
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_fetch_offline_and_unknown(tmp_path, capsys, monkeypatch):
    import magkit.datasets as ds

    def boom(url, timeout=60.0):
        raise AssertionError("network touched")

    monkeypatch.setattr(ds, "_download", boom)
    assert main(["fetch-odds", "--name", "breastw", "--dir", str(tmp_path), "--sha256", "0" * 64]) == 2
    assert "--allow-network" in json.loads(capsys.readouterr().err)["message"]
    assert main(["fetch-odds", "--name", "nope", "--dir", str(tmp_path)]) == 2
    assert "breastw" in json.loads(capsys.readouterr().err)["message"]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "magkit", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "graph-weight" in r.stdout
