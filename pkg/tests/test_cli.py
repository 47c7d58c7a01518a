"""End-to-end command-line runs: routing, files, exit codes, manifests."""

import csv
import json

import pytest

from coreperiphery.cli import (EXIT_INTERNAL, EXIT_OK, EXIT_TOLERANCE,
                               EXIT_USER, dispatch)


def run(*argv):
    return dispatch(list(argv))


@pytest.fixture
def planted(tmp_path):
    prefix = str(tmp_path / "net")
    code = run("generate", "--n", "300", "--c11", "8", "--c12", "3",
               "--c22", "1", "--seed", "3", "--output", prefix)
    assert code == EXIT_OK
    return prefix


def read_vertices(prefix):
    with open(prefix + ".vertices.csv", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestGenerate:
    def test_writes_edges_truth_and_manifest(self, planted):
        with open(planted + ".truth.tsv", encoding="utf-8") as f:
            labels = [line.split("\t") for line in f.read().splitlines()]
        assert len(labels) == 300
        assert {g for _, g in labels} == {"1", "2"}
        with open(planted + ".manifest.json", encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["subcommand"] == "generate"
        assert manifest["seed"] == 3
        assert manifest["outcome"]["n"] == 300

    def test_reproducible_outputs(self, tmp_path):
        blobs = []
        for name in ("a", "b"):
            prefix = str(tmp_path / name)
            assert run("generate", "--n", "200", "--theta1", "3",
                       "--theta2", "0.2", "--r", "2", "--seed", "9",
                       "--output", prefix) == EXIT_OK
            with open(prefix + ".edges", "rb") as f:
                blobs.append(f.read())
        assert blobs[0] == blobs[1]

    def test_inadmissible_theta2_is_a_user_error(self, tmp_path, caplog):
        code = run("generate", "--n", "1000", "--theta1", "3", "--theta2",
                   "0.9", "--r", "2", "--output", str(tmp_path / "x"))
        assert code == EXIT_USER
        assert "admissible interval" in caplog.text

    def test_mixing_flags_required(self, tmp_path, caplog):
        code = run("generate", "--n", "100", "--output", str(tmp_path / "x"))
        assert code == EXIT_USER
        assert "mixing matrix" in caplog.text


class TestDetect:
    def test_round_trip(self, planted, tmp_path):
        out = str(tmp_path / "fit")
        code = run("detect", "--input", planted + ".edges", "--restarts",
                   "2", "--seed", "7", "--output", out)
        assert code == EXIT_OK
        rows = read_vertices(out)
        assert len(rows) == 300
        assert set(r["assignment"] for r in rows) <= {"core", "periphery"}
        assert all(0.0 <= float(r["q_core"]) <= 1.0 for r in rows)
        with open(out + ".summary.json", encoding="utf-8") as f:
            summary = json.load(f)
        for key in ("gamma1", "c11", "c12", "c22", "objective",
                    "structure_class", "iterations", "restarts_used"):
            assert key in summary

    def test_identical_runs_bit_identical_outputs(self, planted, tmp_path):
        blobs = []
        for name in ("f1", "f2"):
            out = str(tmp_path / name)
            assert run("detect", "--input", planted + ".edges",
                       "--restarts", "2", "--seed", "7",
                       "--output", out) == EXIT_OK
            with open(out + ".vertices.csv", "rb") as f:
                blobs.append(f.read())
        assert blobs[0] == blobs[1]

    def test_missing_input_file(self, tmp_path):
        code = run("detect", "--input", str(tmp_path / "absent.tsv"),
                   "--output", str(tmp_path / "out"))
        assert code == EXIT_USER


class TestDegreeCommands:
    def test_detect_degree(self, planted, tmp_path):
        out = str(tmp_path / "deg")
        code = run("detect-degree", "--input", planted + ".edges",
                   "--output", out)
        assert code == EXIT_OK
        with open(out + ".summary.json", encoding="utf-8") as f:
            summary = json.load(f)
        assert summary["r"] >= 1.0
        assert 0.0 < summary["gamma1"] < 1.0
        assert len(read_vertices(out)) == 300

    def test_split_degree_fraction(self, planted, tmp_path):
        out = str(tmp_path / "split")
        code = run("split-degree", "--input", planted + ".edges",
                   "--core-fraction", "0.25", "--output", out)
        assert code == EXIT_OK
        rows = read_vertices(out)
        core = sum(r["assignment"] == "core" for r in rows)
        assert core == 75  # ceil(0.25 * 300)
        with open(out + ".summary.json", encoding="utf-8") as f:
            assert json.load(f)["core_size"] == 75


class TestBenchmark:
    def test_sweep_csv_and_plot_script(self, tmp_path):
        out = str(tmp_path / "sweep")
        code = run("benchmark", "--n", "400", "--trials", "2", "--theta1",
                   "3", "--theta2-grid", "0.0,0.3", "--methods",
                   "naive,degree_em", "--workers", "1", "--plot-script",
                   "--output", out)
        assert code == EXIT_OK
        with open(out + ".sweep.csv", encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == ("theta1,theta2,method,mean_error,stderr,trials,"
                            "mean_iters,failures")
        assert len(lines) == 1 + 2 * 2
        with open(out + ".plot.gp", encoding="utf-8") as f:
            script = f.read()
        assert "plot " in script and "naive" in script

    def test_needs_a_family(self, tmp_path, caplog):
        code = run("benchmark", "--output", str(tmp_path / "x"))
        assert code == EXIT_USER
        assert "theta1" in caplog.text


class TestOracleCheck:
    def test_shipped_suite_passes(self, capsys):
        assert run("oracle-check") == EXIT_OK
        out = capsys.readouterr().out
        assert "worst deviation" in out

    def test_tolerance_breach_exit_code(self):
        assert run("oracle-check", "--tol", "1e-30") == EXIT_TOLERANCE


class TestConfigFile:
    def test_config_supplies_flag_defaults(self, tmp_path):
        cfg = tmp_path / "gen.json"
        prefix = str(tmp_path / "net")
        cfg.write_text(json.dumps({"n": 120, "c11": 6, "c12": 3,
                                   "c22": 1.5, "seed": 4, "output": prefix}))
        assert run("--config", str(cfg), "generate") == EXIT_OK
        with open(prefix + ".manifest.json", encoding="utf-8") as f:
            assert json.load(f)["outcome"]["n"] == 120

    def test_explicit_flags_override_config(self, tmp_path):
        cfg = tmp_path / "gen.json"
        prefix = str(tmp_path / "net")
        cfg.write_text(json.dumps({"n": 120, "c11": 6, "c12": 3,
                                   "c22": 1.5, "output": prefix}))
        assert run("--config", str(cfg), "generate", "--n", "80") == EXIT_OK
        with open(prefix + ".manifest.json", encoding="utf-8") as f:
            assert json.load(f)["outcome"]["n"] == 80

    def test_missing_config_file(self, tmp_path, capsys):
        code = run("--config", str(tmp_path / "none.json"), "generate",
                   "--n", "10", "--output", str(tmp_path / "x"))
        assert code == EXIT_USER


class TestExitCodes:
    def test_help_exits_zero(self):
        assert run("--help") == EXIT_OK

    def test_unknown_flag(self):
        assert run("generate", "--bogus") == EXIT_USER

    def test_missing_subcommand(self):
        assert run() == EXIT_USER


class TestHelpSnapshots:
    EXPECTED = {
        "generate": ["--n", "--gamma1", "--c11", "--c12", "--c22",
                     "--theta1", "--theta2", "--r", "--c", "--alpha1",
                     "--alpha2", "--delta", "--seed", "--output"],
        "detect": ["--input", "--restarts", "--em-tol", "--em-max-iter",
                   "--bp-tol", "--bp-max-iter", "--init-spread", "--damping",
                   "--seed", "--output"],
        "detect-degree": ["--input", "--tol", "--max-iter", "--seed",
                          "--output"],
        "split-degree": ["--input", "--core-fraction", "--output"],
        "benchmark": ["--n", "--trials", "--gamma1", "--theta1", "--r",
                      "--theta2-grid", "--grid-points", "--c", "--alpha1",
                      "--alpha2", "--delta-grid", "--methods",
                      "--true-params", "--restarts", "--workers",
                      "--plot-script", "--seed", "--output"],
        "oracle-check": ["--tol", "--ambient-n", "--seed", "--output"],
    }

    @pytest.mark.parametrize("subcommand", sorted(EXPECTED))
    def test_every_flag_documented_with_default(self, subcommand, capsys):
        assert run(subcommand, "--help") == EXIT_OK
        text = capsys.readouterr().out
        for flag in self.EXPECTED[subcommand]:
            assert flag in text, flag
        assert "default" in text
