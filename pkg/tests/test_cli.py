import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fdridge.cli import main
from fdridge.datagen import SyntheticSpec, gen_synthetic
from fdridge.experiment import (RECORD_COLUMNS, SweepConfig, bench_cell, derive_seed, run_one,
                                run_sweep, write_records)
from fdridge.linalg import InvalidInput, write_csv_matrix

SPEC_COLUMNS = ["dataset_id", "solver", "ell", "gamma", "seed", "trial", "coef_error", "pred_error",
                "train_time_s", "query_time_s", "n", "d"]


@pytest.fixture(scope="module")
def hr_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("hr")
    assert main(["generate", str(out), "--kind", "hr", "--d", "32", "--n", "200", "--seed", "7"]) == 0
    return out


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestGenerate:
    def test_manifest_R(self, tmp_path, capsys):
        assert main(["generate", str(tmp_path), "--kind", "hr", "--d", "256", "--n", "1024", "--seed", "7"]) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["spec"]["R"] == 128
        assert man["seed"] == 7 and man["gamma"] in 2.0 ** np.arange(21)
        assert json.loads(capsys.readouterr().out) == man

    def test_lr_small(self, tmp_path):
        assert main(["generate", str(tmp_path), "--kind", "lr", "--d", "10", "--n", "50"]) == 0
        assert json.loads((tmp_path / "manifest.json").read_text())["spec"]["R"] == 1

    def test_missing_dir(self, tmp_path):
        assert main(["generate", str(tmp_path / "nope"), "--d", "8", "--n", "20"]) == 2

    def test_shingle(self, tmp_path):
        series = tmp_path / "temp.csv"
        write_csv_matrix(series, np.cumsum(np.random.default_rng(0).standard_normal(400))[:, None])
        out = tmp_path / "ds"
        out.mkdir()
        assert main(["generate", str(out), "--kind", "shingle", "--series", str(series),
                     "--d", "8", "--n", "200", "--gamma", "4"]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["kind"] == "shingle" and man["gamma"] == 4 and man["n"] == 200

    def test_shingle_needs_series(self, tmp_path):
        assert main(["generate", str(tmp_path), "--kind", "shingle"]) == 2

    def test_bad_size_is_usage_error(self, tmp_path):
        assert main(["generate", str(tmp_path), "--kind", "lr", "--d", "5", "--n", "10"]) == 2


class TestRun:
    def test_rr_is_reference(self, hr_dir, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["run", str(hr_dir), "--solver", "rr", "--out", str(out)]) == 0
        row = read_rows(out)[0]
        assert float(row["coef_error"]) == 0.0

    def test_fd_exact_recovery(self, tmp_path):
        rng = np.random.default_rng(1)
        data_dir = tmp_path / "low"
        data_dir.mkdir()
        from fdridge.datagen import Dataset, save_dataset
        A = rng.standard_normal((100, 4)) @ rng.standard_normal((4, 20))
        save_dataset(Dataset(A, rng.standard_normal(100), A[:5], np.zeros(5)), data_dir, {"gamma": 0.01})
        for gamma in ("0.01", "1", "1000"):
            out = tmp_path / f"fd{gamma}.csv"
            assert main(["run", str(data_dir), "--solver", "fd", "--ell", "5", "--gamma", gamma,
                         "--out", str(out)]) == 0
            assert float(read_rows(out)[0]["coef_error"]) <= 1e-6

    def test_stdout(self, hr_dir, capsys):
        assert main(["run", str(hr_dir), "--solver", "fd", "--ell", "8"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split(",") == RECORD_COLUMNS and len(lines) == 2

    def test_unknown_solver(self, hr_dir):
        with pytest.raises(SystemExit) as exc:
            main(["run", str(hr_dir), "--solver", "svd"])
        assert exc.value.code == 2

    def test_missing_dataset(self, tmp_path):
        assert main(["run", str(tmp_path / "missing"), "--solver", "fd"]) == 2


class TestSweep:
    def test_rows_and_schema(self, hr_dir, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", str(hr_dir), "--solvers", "fd,rp", "--ell", "4,8,2^4", "--trials", "10",
                     "--out", str(out)]) == 0
        with open(out, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh))
        assert header[:12] == SPEC_COLUMNS
        assert header == RECORD_COLUMNS
        rows = read_rows(out)
        assert len(rows) == 66
        assert sum(r["trial"] == "mean" for r in rows) == 6
        for r in rows:
            assert float(r["coef_error"]) >= 0 and float(r["train_time_s"]) >= 0

    def test_deterministic_errors(self, hr_dir, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", str(hr_dir), "--solvers", "rr,fd,rfd,isvd,twolevel,cs", "--ell", "8", "--trials", "3"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        ra, rb = read_rows(a), read_rows(b)
        for x, y in zip(ra, rb):
            assert (x["solver"], x["coef_error"], x["pred_error"], x["seed"]) == \
                   (y["solver"], y["coef_error"], y["pred_error"], y["seed"])
        for solver in ("fd", "rfd", "isvd", "rr"):
            errs = {r["coef_error"] for r in ra if r["solver"] == solver and r["trial"] != "mean"}
            assert len(errs) == 1

    def test_failed_cell_recorded(self, hr_dir, tmp_path):
        # two-level FD needs ell > 3k >= 3, so ell=3 fails per row and the sweep goes on
        out = tmp_path / "f.csv"
        assert main(["sweep", str(hr_dir), "--solvers", "twolevel,fd", "--ell", "3", "--trials", "2",
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        assert all(r["error"] for r in rows if r["solver"] == "twolevel")
        assert not any(r["error"] for r in rows if r["solver"] == "fd")

    def test_quoting(self, tmp_path):
        rec = run_one(gen_synthetic(SyntheticSpec(n=40, d=8, seed=0)), "fd", 4, 2.0, dataset_id='a,"b"')
        write_records(tmp_path / "q.csv", [rec])
        assert read_rows(tmp_path / "q.csv")[0]["dataset_id"] == 'a,"b"'


class TestExperiment:
    def test_config_validation(self):
        with pytest.raises(InvalidInput):
            SweepConfig(["fd"], [1], 1.0)
        with pytest.raises(InvalidInput):
            SweepConfig(["fd"], [4], 1.0, trials=0)
        with pytest.raises(InvalidInput):
            SweepConfig(["nope"], [4], 1.0)

    def test_seeds_independent(self):
        seeds = {derive_seed(0, t, s) for t in range(10) for s in ("rp", "cs", "twolevel")}
        assert len(seeds) == 30
        assert derive_seed(3, 1, "rp") == derive_seed(3, 1, "rp")

    def test_threaded_sweep_same_errors(self):
        data = gen_synthetic(SyntheticSpec(n=80, d=12, seed=1))
        cfg = SweepConfig(["fd", "cs"], [4, 8], 8.0, trials=3)
        a = run_sweep(data, cfg, workers=1)
        b = run_sweep(data, cfg, workers=3)
        assert [r.coef_error for r in a] == [r.coef_error for r in b]

    def test_sim_time(self):
        rec = run_one(gen_synthetic(SyntheticSpec(n=64, d=8, seed=0)), "fd", 8, 1.0)
        assert rec.sim_time_s == pytest.approx(rec.train_time_s + rec.query_time_s * 64 / 8)

    def test_bench_cell(self):
        row = bench_cell("fd", 64, 16, 8, repeats=1)
        assert row["train_time_s"] > 0 and row["query_time_s"] > 0


def test_bench_command(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--vary", "n", "--n", "64,128", "--d", "32", "--ell", "8",
                 "--solvers", "fd,rr", "--repeats", "1", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [(r["solver"], r["n"]) for r in rows] == [("fd", "64"), ("rr", "64"), ("fd", "128"), ("rr", "128")]


def test_verify_quick(capsys):
    code = main(["verify", "--quick"])
    out = capsys.readouterr().out
    assert code == 0, out
    assert out.count("PASS") >= 5


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fdridge", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "generate" in res.stdout
