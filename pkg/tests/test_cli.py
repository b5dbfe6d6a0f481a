import csv
import json
import os
import subprocess
import sys

import pytest

from bosonmetro import __version__
from bosonmetro.cli import RunConfig, UsageError, main, parse_config, parse_sweep


def rows_of(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestParseConfig:
    def test_witness_flags(self):
        cfg = parse_config(["witness", "--probe", "fock:1", "--generator", "quad:theta=0"])
        assert isinstance(cfg, RunConfig)
        assert (cfg.command, cfg.probe, cfg.generator) == ("witness", "fock:1", "quad:theta=0")
        assert cfg.seed == 0 and cfg.tau == 1e-12

    def test_precedence(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# comment\nseed = 7\ntau = 1e-10  # trailing\n")
        assert parse_config(["witness", "--config", str(conf)]).seed == 7
        cfg = parse_config(["witness", "--config", str(conf), "--seed", "9"])
        assert cfg.seed == 9 and cfg.tau == 1e-10

    def test_unknown_key(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("sede = 7\n")
        with pytest.raises(UsageError, match="sede"):
            parse_config(["witness", "--config", str(conf)])

    def test_bad_probe(self):
        with pytest.raises(UsageError, match="out of"):
            parse_config(["witness", "--probe", "vacuumdoped:p=1.5,alpha=1"])

    def test_unknown_flag(self):
        with pytest.raises(UsageError):
            parse_config(["witness", "--bogus", "1"])

    def test_sweeps(self):
        assert parse_sweep("0.1:0.05:3") == pytest.approx([0.1, 0.15, 0.2])
        assert parse_sweep("0.3,0.5,0.8") == [0.3, 0.5, 0.8]
        assert parse_sweep("9") == [9.0]
        with pytest.raises(UsageError):
            parse_sweep("1:2")


class TestExitCodes:
    def test_usage(self, capsys):
        assert main(["witness", "--probe", "vacuumdoped:p=1.5,alpha=1"]) == 2
        assert "p" in capsys.readouterr().err
        assert main(["nosuchcommand"]) == 2
        assert main(["scaling", "--generator", "quad:theta=0"]) == 2

    def test_numeric_failure(self, capsys, tmp_path):
        out = tmp_path / "r"
        code = main(["witness", "--probe", "coherent:3", "--dim", "5", "--out", str(out)])
        assert code == 1
        assert "numeric failure" in capsys.readouterr().err
        assert not list(tmp_path.iterdir())

    def test_degenerate_estimation(self, capsys):
        assert main(["montecarlo", "--probe", "fock:0", "--n", "100", "--replicates", "2"]) == 1


class TestCommands:
    def test_ag(self, capsys):
        assert main(["ag", "kerr"]) == 0
        assert capsys.readouterr().out.strip() == "4*ad^3*a^3 + 6*ad^2*a^2 + ad*a"

    def test_ag_squeeze(self, capsys):
        assert main(["ag", "squeeze:theta=0.3"]) == 0
        assert capsys.readouterr().out.strip() == "4*ad*a + 2"

    def test_witness_outputs(self, tmp_path):
        out = str(tmp_path / "w")
        assert main(["witness", "--probe", "fock:1", "--generator", "quad:theta=0",
                     "--out", out]) == 0
        row = rows_of(out + ".csv")[0]
        assert float(row["witness"]) == pytest.approx(8, abs=1e-9)
        assert row["witness_positive"] == "true"
        report = json.load(open(out + ".json"))
        assert report["version"] == __version__ and report["command"] == "witness"
        assert report["config"]["tau"] == 1e-12 and report["config"]["seed"] == 0
        assert report["result"]["eps_eig"] == 1e-12
        assert "dim" in report["result"] and "tail_mass" in report["result"]

    def test_format_selection(self, tmp_path):
        out = str(tmp_path / "x")
        assert main(["ag", "kerr", "--out", out, "--format", "json"]) == 0
        assert sorted(os.listdir(tmp_path)) == ["x.json"]

    def test_threshold_scan(self, tmp_path):
        out = str(tmp_path / "t")
        assert main(["threshold-scan", "--p", "0.25", "--alpha2", "0.1:0.05:9",
                     "--out", out]) == 0
        rows = rows_of(out + ".csv")
        assert list(rows[0]) == ["p", "alpha2", "four_lambda2", "fq_coh", "beats"]
        for r in rows:
            a2 = float(r["alpha2"])
            if abs(a2 - 0.25) > 1e-9:
                assert (r["beats"] == "true") == (a2 > 0.25)

    def test_scaling(self, tmp_path):
        out = str(tmp_path / "s")
        assert main(["scaling", "--alpha2", "9", "--p", "0.3,0.5,0.8", "--generator", "kerr",
                     "--out", out]) == 0
        rows = rows_of(out + ".csv")
        assert list(rows[0]) == ["p", "alpha2", "fq", "fc", "fq_over_asymptote",
                                 "fc_over_asymptote"]
        assert len(rows) == 3
        for r in rows:
            assert float(r["fc"]) <= float(r["fq"])
            assert 0.5 < float(r["fq_over_asymptote"]) < 2
            assert 0.5 < float(r["fc_over_asymptote"]) < 2

    def test_cfi(self, tmp_path, capsys):
        out = str(tmp_path / "c")
        assert main(["cfi", "--probe", "coherent:2i", "--out", out]) == 0
        assert list(rows_of(out + ".csv")[0]) == ["x", "p", "score"]
        result = json.load(open(out + ".json"))["result"]
        assert result["fc"] == pytest.approx(4 * 4 * 81, rel=1e-8)

    def test_montecarlo_reproducible(self, tmp_path):
        argv = ["montecarlo", "--probe", "coherent:3i", "--n", "500", "--replicates", "4",
                "--seed", "3"]
        out = str(tmp_path / "m")
        runs = []
        for _ in range(2):
            assert main(argv + ["--out", out]) == 0
            runs.append([open(out + ext, "rb").read() for ext in (".csv", ".json")])
        assert runs[0] == runs[1]
        assert list(rows_of(out + ".csv")[0]) == ["replicate", "chi_hat"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bosonmetro", "ag", "kerr"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "4*ad^3*a^3 + 6*ad^2*a^2 + ad*a"
    proc = subprocess.run([sys.executable, "-m", "bosonmetro", "witness", "--probe",
                           "vacuumdoped:p=1.5,alpha=1"], capture_output=True, text=True)
    assert proc.returncode == 2
