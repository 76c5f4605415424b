import csv
import json
import subprocess
import sys

import pytest

from tspec.cli import main
from tspec.spectrumfile import read_spectrum


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def config_path(workdir):
    cfg = {
        "potential": {"kind": "constant", "value": 1.0, "h": 0.0},
        "variant": "robin",
        "spectrum": {"region": [1.5, 4.0, 0.5, 2.0]},
        "validate": {"contours": [2]},
    }
    path = workdir / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture(scope="module")
def spectrum_path(workdir, config_path):
    out = workdir / "spec.json"
    code = main(["--config", config_path, "--out", str(out), "spectrum"])
    assert code == 0
    return str(out)


class TestSpectrumCommand:
    def test_writes_json_and_csv(self, spectrum_path):
        header, records, hash_ok = read_spectrum(spectrum_path)
        assert hash_ok
        assert len(records) == 4
        assert all(r.index == 0 for r in records)
        with open(spectrum_path[:-5] + ".csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "index"
        assert len(rows) == 5

    def test_round_trip_lossless(self, spectrum_path):
        header, records, _ = read_spectrum(spectrum_path)
        with open(spectrum_path) as fh:
            doc = json.load(fh)
        for rec, raw in zip(records, doc["records"]):
            assert rec.re_k == raw["re_k"] and rec.im_k == raw["im_k"]
            assert rec.residual == raw["residual"]

    def test_determinism_modulo_timestamp(self, workdir, config_path):
        out1, out2 = workdir / "d1.json", workdir / "d2.json"
        assert main(["--config", config_path, "--out", str(out1), "spectrum"]) == 0
        assert main(["--config", config_path, "--out", str(out2), "spectrum"]) == 0
        doc1 = json.loads(out1.read_text())
        doc2 = json.loads(out2.read_text())
        assert doc1["header"].pop("created") != ""
        assert doc2["header"].pop("created") != ""
        assert doc1 == doc2

    def test_malformed_config_exit_1(self, workdir):
        bad = workdir / "bad.json"
        bad.write_text(json.dumps({"potential": {"kind": "constant", "value": 1.0},
                                   "variant": "robin"}))
        out = workdir / "never.json"
        code = main(["--config", str(bad), "--out", str(out), "spectrum"])
        assert code == 1
        assert not out.exists()

    def test_targeted_index_mode(self, workdir, config_path):
        out = workdir / "targeted.json"
        code = main(["--config", config_path, "--out", str(out),
                     "spectrum", "--n", "1..1"])
        assert code == 0
        _, records, _ = read_spectrum(str(out))
        assert {r.index for r in records} == {1}

    def test_degenerate_potential_warns(self, workdir, capsys):
        cfg = workdir / "zero.json"
        cfg.write_text(json.dumps({"potential": {"kind": "constant", "value": 0.0, "h": 0.0},
                                   "variant": "robin"}))
        out = workdir / "zero_spec.json"
        code = main(["--config", str(cfg), "--out", str(out), "spectrum"])
        assert code == 0
        _, records, _ = read_spectrum(str(out))
        assert records == []
        assert "degenerate" in capsys.readouterr().err


class TestCharfunCommand:
    def test_eval_prints_json(self, config_path, capsys):
        assert main(["--config", config_path, "charfun", "eval", "--k", "2.0,0.5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["k"] == {"re": 2.0, "im": 0.5}
        assert "D" in doc

    def test_grid_csv(self, workdir, config_path):
        out = workdir / "grid.csv"
        code = main(["--config", config_path, "--out", str(out),
                     "charfun", "grid", "--region", "0,6,0,2", "--nx", "5", "--ny", "3"])
        assert code == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["re_k", "im_k", "re_D", "im_D"]
        assert len(rows) == 16

    def test_kernel_dump_flag(self, workdir, config_path, capsys):
        dump = workdir / "kernel.csv"
        code = main(["--config", config_path, "charfun", "eval", "--k", "1.0,0.0",
                     "--dump-kernel", str(dump), "--kernel-mesh", "32"])
        assert code == 0
        capsys.readouterr()
        rows = list(csv.reader(open(dump)))
        assert rows[0] == ["t", "K_0_t"]
        assert len(rows) == 2 + 2 * 32  # header + 2*mesh+1 nodes
        # K(0,0) = (1/2) int_0^1 q = 1/2 for q = 1
        assert float(rows[1][1]) == pytest.approx(0.5, abs=1e-9)


class TestAsymptoticsCommand:
    def test_predict(self, config_path, capsys):
        code = main(["--config", config_path, "asymptotics", "predict",
                     "--theorem", "T41i_W22", "--n", "3..6"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert [r["n"] for r in doc["rows"]] == [3, 4, 5, 6]
        assert doc["constants"]["Q1"] == pytest.approx(-1.0)

    def test_residuals_csv(self, workdir, config_path, spectrum_path):
        out = workdir / "resid.csv"
        code = main(["--config", config_path, "--out", str(out),
                     "asymptotics", "residuals", "--spectrum", spectrum_path])
        # The tiny spectrum has only n = 0, so no n >= 1 rows exist.
        assert code == 3


class TestGammaCommand:
    def test_direct_route(self, config_path, spectrum_path, capsys):
        code = main(["--config", config_path, "gamma", "--route", "direct",
                     "--spectrum", spectrum_path, "--probe", "0.37"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["route"] == "direct"
        assert doc["truncation"] == 2


class TestValidateCommand:
    def test_fresh_run_passes(self, config_path, spectrum_path, capsys):
        code = main(["--config", config_path, "validate", "--spectrum", spectrum_path])
        out = capsys.readouterr().out
        assert code == 0
        assert "symmetry-closure" in out and "PASS" in out

    def test_corrupted_file_fails_symmetry(self, workdir, config_path, spectrum_path, capsys):
        doc = json.loads(open(spectrum_path).read())
        doc["records"] = [r for r in doc["records"]
                          if not (r["re_k"] > 0 and r["im_k"] < 0)]
        broken = workdir / "broken.json"
        broken.write_text(json.dumps(doc))
        code = main(["--config", config_path, "validate", "--spectrum", str(broken)])
        out = capsys.readouterr().out
        assert code == 2
        assert "FAIL" in out

    def test_missing_spectrum_input(self, config_path):
        code = main(["--config", config_path, "validate"])
        assert code == 1


class TestEnvOverrides:
    def test_tol_env(self, config_path, monkeypatch, capsys):
        monkeypatch.setenv("TSPEC_TOL", "1e-10")
        assert main(["--config", config_path, "charfun", "eval", "--k", "1.0,0.0"]) == 0
        capsys.readouterr()

    def test_config_env(self, config_path, monkeypatch, capsys):
        monkeypatch.setenv("TSPEC_CONFIG", config_path)
        assert main(["charfun", "eval", "--k", "1.0,0.0"]) == 0
        capsys.readouterr()

    def test_bad_env_value(self, config_path, monkeypatch):
        monkeypatch.setenv("TSPEC_THREADS", "many")
        assert main(["--config", config_path, "charfun", "eval", "--k", "1.0,0.0"]) == 1


class TestConsoleEntry:
    def test_subprocess_help(self):
        proc = subprocess.run([sys.executable, "-m", "tspec.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "tspec" in proc.stdout
