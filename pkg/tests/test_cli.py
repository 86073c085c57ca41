import json

import numpy as np
import pytest

from bbccv.cli import main


@pytest.fixture
def workspace(tmp_path):
    rng = np.random.default_rng(7)
    n = 120
    y = rng.integers(0, 2, size=n)
    X = rng.normal(size=(n, 2)) + y[:, None]
    lines = ["x1,x2,label"] + [f"{repr(float(a))},{repr(float(b))},{t}" for (a, b), t in zip(X, y)]
    (tmp_path / "data.csv").write_text("\n".join(lines) + "\n")
    grid = {"grid": [{"learner": "knn", "params": {"k": [1, 5, 15]}}, {"learner": "majority"}]}
    (tmp_path / "grid.json").write_text(json.dumps(grid))
    (tmp_path / "pair.json").write_text(json.dumps({"learner": "knn", "params": {"k": [1, 7]}}))
    return tmp_path


def _reports(path):
    return json.loads(path.read_text())["reports"]


def test_run_ncv_counts(workspace):
    out = workspace / "ncv.json"
    rc = main(["run", str(workspace / "data.csv"), str(workspace / "pair.json"),
               "--protocol", "ncv", "--K", "3", "--out", str(out)])
    assert rc == 0
    assert _reports(out)[0]["models_trained"] == 22


def test_run_repeats_dump_shape(workspace):
    dump = workspace / "m.csv"
    rc = main(["run", str(workspace / "data.csv"), str(workspace / "pair.json"), "--K", "5",
               "--repeats", "10", "--dump-matrix", str(dump), "--out", str(workspace / "r.json")])
    assert rc == 0
    assert len(dump.read_text().splitlines()) == 10 * 120 + 1
    protocols = [r["protocol"] for r in _reports(workspace / "r.json")]
    assert protocols == ["cvt", "bbc"]


def test_bced_without_drops_equals_cvt_then_correct(workspace):
    data, grid = str(workspace / "data.csv"), str(workspace / "grid.json")
    bced, dump, corr = workspace / "bced.json", workspace / "m.csv", workspace / "c.json"
    assert main(["run", data, grid, "--protocol", "bced", "--alpha-drop", "1.0",
                 "--seed", "3", "--out", str(bced)]) == 0
    assert main(["run", data, grid, "--protocol", "cvt", "--seed", "3",
                 "--dump-matrix", str(dump), "--out", str(workspace / "cvt.json")]) == 0
    assert main(["correct", str(dump), "--seed", "3", "--out", str(corr)]) == 0
    a, b = _reports(bced)[0], _reports(corr)[0]
    assert a["estimate"] == b["estimate"] and a["ci"] == b["ci"]
    assert a["selected_config"] == b["selected_config"]


def test_correct_tt_zero_bias(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("sample_id,label,fold,a,b\n1,0,1,0,1\n2,0,1,1,1\n3,0,2,0,0\n4,0,2,0,1\n")
    out = tmp_path / "tt.json"
    assert main(["correct", str(m), "--method", "both", "--B", "100", "--out", str(out)]) == 0
    bbc_doc, tt_doc = _reports(out)
    assert tt_doc["extra"]["tt_bias"] == 0.0
    assert tt_doc["selected_config"] == "a"
    assert bbc_doc["ci"][0] <= bbc_doc["ci"][1]


def test_correct_tt_auc_degenerate_fold_exits_one(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("sample_id,label,fold,a\n1,0,1,0.2\n2,1,1,0.7\n3,1,2,0.4\n4,1,2,0.9\n")
    assert main(["correct", str(m), "--metric", "auc", "--method", "tt"]) == 1
    assert "AUC needs at least one positive" in capsys.readouterr().err


def test_usage_errors_exit_two(workspace, capsys):
    assert main(["correct", "x.csv", "--metric", "accuracy"]) == 2
    assert main(["correct", str(workspace / "missing.csv")]) == 2
    assert main(["run", str(workspace / "data.csv"), str(workspace / "grid.json"),
                 "--protocol", "ncv", "--repeats", "2"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_compute_errors_exit_one(workspace):
    assert main(["run", str(workspace / "data.csv"), str(workspace / "grid.json"),
                 "--K", "500"]) == 1
    bad = workspace / "bad.csv"
    bad.write_text("sample_id,label,fold,a\n1,NaN,1,0\n")
    assert main(["correct", str(bad)]) == 1


def test_runs_are_byte_identical(workspace):
    args = ["run", str(workspace / "data.csv"), str(workspace / "grid.json"),
            "--protocol", "bced", "--min-oos", "20", "--B", "200", "--seed", "5"]
    a, b = workspace / "a.json", workspace / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_and_report(tmp_path, capsys):
    settings = tmp_path / "s.json"
    settings.write_text(json.dumps([{"N": 20, "C": 5, "reps": 3}, {"N": 30, "C": 1, "reps": 3}]))
    prefix = tmp_path / "bias"
    assert main(["simulate", "--settings", str(settings), "--out", str(prefix), "--B", "100"]) == 0
    doc = json.loads((tmp_path / "bias.json").read_text())
    assert len(doc["rows"]) == 2 * 5
    csv_lines = (tmp_path / "bias.csv").read_text().splitlines()
    assert len(csv_lines) == 11 and csv_lines[0].startswith("N,C,")
    capsys.readouterr()
    assert main(["report", str(tmp_path / "bias.json")]) == 0
    assert "mean_bias" in capsys.readouterr().out


def test_report_bundle(workspace, capsys):
    out = workspace / "r.json"
    main(["run", str(workspace / "data.csv"), str(workspace / "grid.json"), "--protocol", "bced",
          "--min-oos", "20", "--B", "200", "--out", str(out)])
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith(" bced") and "CI [" in text
    junk = workspace / "junk.json"
    junk.write_text("{}")
    assert main(["report", str(junk)]) == 2
