import csv
import json

import numpy as np
import pytest

from waxkit.cli import main
from waxkit.model import BlockDiag, RngSpec, matrix_from_obj, sample_gaussian, save_matrix
from conftest import FIXTURES


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_decompose_golden(tmp_path, capsys):
    out = tmp_path / "f.json"
    code = main(["decompose", str(FIXTURES / "example8_H.json"), str(FIXTURES / "example8_A.json"),
                 "--l", "2", "--out", str(out)])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("residual: ")
    assert float(line.split()[1]) < 1e-10
    obj = json.loads(out.read_text())
    w = BlockDiag(tuple(matrix_from_obj(b) for b in obj["W_blocks"]))
    x = matrix_from_obj(obj["X"])
    a = matrix_from_obj(json.loads((FIXTURES / "example8_A.json").read_text()))
    h = matrix_from_obj(json.loads((FIXTURES / "example8_H.json").read_text()))
    assert np.linalg.norm(w.dense() @ a @ x - h) / np.linalg.norm(h) < 1e-10
    assert obj["nullspace_dim"] == 1


def test_decompose_dims_mismatch(capsys):
    code = main(["decompose", str(FIXTURES / "example8_H.json"), str(FIXTURES / "example8_A.json"),
                 "--l", "2", "--m", "10"])
    assert code == 1


def test_decompose_bad_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["decompose", str(bad), str(FIXTURES / "example8_A.json"), "--l", "2"]) == 1
    assert main(["decompose", str(tmp_path / "missing.json"),
                 str(FIXTURES / "example8_A.json"), "--l", "2"]) == 1


def test_decompose_infeasible(tmp_path, capsys):
    h, a = tmp_path / "h.json", tmp_path / "a.json"
    save_matrix(h, sample_gaussian(RngSpec(0), 12, 4))
    save_matrix(a, sample_gaussian(RngSpec(1), 12, 5))
    out = tmp_path / "diag.json"
    assert main(["decompose", str(h), str(a), "--l", "2", "--out", str(out)]) == 2
    diag = json.loads(out.read_text())
    assert diag["status"] == "infeasible" and diag["nullspace_dim"] == 0


def test_plan(capsys):
    assert main(["plan", "--t", "50", "--k", "3", "--l", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["m_max"] == 149


def test_bound_table(tmp_path):
    out = tmp_path / "bt.csv"
    assert main(["experiment", "bound-table", "--m", "60", "--k", "7", "--out", str(out)]) == 0
    rows = {(int(r["L"]), int(r["K"])): r for r in read_rows(out)}
    assert rows[(6, 7)]["min_ones"] == "66"
    assert rows[(2, 3)]["min_ones"] == "78"
    assert rows[(3, 6)]["min_ones"] == "89"
    assert rows[(1, 1)]["min_ones"] == "60"
    meta = json.loads((tmp_path / "bt.csv.json").read_text())
    assert meta["config"]["kind"] == "bound-table" and "waxkit_version" in meta


def test_rate_curve_endpoint_and_determinism(tmp_path, monkeypatch):
    args = ["experiment", "rate-curve", "--m", "24", "--k", "5", "--l", "3",
            "--sweep", "T:8:10", "--trials", "2", "--seed", "4"]
    monkeypatch.setenv("WAXKIT_THREADS", "1")
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    monkeypatch.setenv("WAXKIT_THREADS", "3")
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = read_rows(tmp_path / "a.csv")
    assert [int(r["T"]) for r in rows] == sorted(int(r["T"]) for r in rows)
    for r in rows:
        if r["T"] == "10":
            assert abs(float(r["relative"]) - 100.0) < 1e-6
        assert r["error"] == ""


def test_rows_are_recomputable(tmp_path):
    from waxkit.lossy import db_to_linear, rate_trial
    from waxkit.model import Dims
    out = tmp_path / "r.csv"
    main(["experiment", "rate-curve", "--m", "24", "--k", "5", "--l", "3", "--t", "7",
          "--seed", "9", "--trials", "1", "--out", str(out)])
    row = read_rows(out)[1]
    dims = Dims(int(row["M"]), int(row["K"]), int(row["L"]), int(row["T"]))
    reps = rate_trial(dims, db_to_linear(float(row["snr_db"])), int(row["seed"]))
    assert format(reps[1].relative, ".17g") == row["relative"]


def test_empty_sweep_writes_nothing(tmp_path):
    out = tmp_path / "e.csv"
    code = main(["experiment", "rate-curve", "--m", "24", "--k", "5", "--l", "3",
                 "--sweep", "T:5:4", "--out", str(out)])
    assert code == 1
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("sweep", ["T", "Q:1:2", "X:1:3"])
def test_bad_sweep(tmp_path, sweep):
    assert main(["experiment", "validate", "--m", "12", "--k", "4", "--l", "2",
                 "--sweep", sweep, "--out", str(tmp_path / "x.csv")]) == 1


def test_partial_failures_recorded(tmp_path):
    out = tmp_path / "p.csv"
    code = main(["experiment", "rate-curve", "--m", "24", "--k", "5", "--l", "3", "--t", "5",
                 "--sweep", "L:4:6", "--eval-budget", "50", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert any(r["error"] for r in rows) and any(not r["error"] for r in rows)


def test_all_rows_failing(tmp_path):
    out = tmp_path / "f.csv"
    code = main(["experiment", "rate-curve", "--m", "24", "--k", "5", "--l", "6", "--t", "5",
                 "--out", str(out)])
    assert code == 2
    assert read_rows(out)[0]["error"].startswith("PreconditionError")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dims": {"M": 12, "K": 4, "L": 2}, "trials": 4, "seed": 1,
                               "sweep": "ones_fraction:30:31",
                               "out_path": str(tmp_path / "v.csv")}))
    assert main(["experiment", "validate", "--config", str(cfg), "--trials", "5"]) == 0
    rows = read_rows(tmp_path / "v.csv")
    assert [r["ones_fraction"] for r in rows] == ["30", "31"]
    assert all(r["trials"] == "5" and r["T"] == "7" for r in rows)


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dims": {"M": 12, "K": 4, "L": 2}, "colour": 3}))
    assert main(["experiment", "validate", "--config", str(cfg),
                 "--out", str(tmp_path / "v.csv")]) == 1


def test_validate_gaussian_and_sparse_search(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["experiment", "validate", "--m", "12", "--k", "4", "--l", "2", "--trials", "3",
                 "--out", str(out)]) == 0
    r = read_rows(out)[0]
    assert r["ones_fraction"] == "gaussian" and float(r["valid_fraction"]) == 1.0
    out = tmp_path / "s.csv"
    assert main(["experiment", "sparse-search", "--m", "6", "--k", "3", "--l", "2",
                 "--budget", "200", "--out", str(out)]) == 0
    r = read_rows(out)[0]
    assert int(r["sum_modules"]) == int(r["ones"]) - int(r["T"]) and r["valid"] == "1"
