"""Tests for run-configuration parsing and the command line driver."""

import csv
import json

import numpy as np
import numpy.testing as npt
import pytest

from ellipot import ConfigError, RunConfig
from ellipot.cli import main


class TestConfigValues:
    @staticmethod
    def parse(text):
        return RunConfig.from_text(text)

    def test_scalar_kinds(self):
        cfg = self.parse(
            "[a]\n"
            "n = 33\n"
            "x = 2.5\n"
            "y = 1e-3\n"
            "flag = true\n"
            "other = False\n"
            "name = upwind\n"
            'expr = "(1+r)^(-3)"\n'
        )
        assert cfg.get("a", "n") == 33
        assert cfg.get("a", "x") == 2.5
        assert cfg.get("a", "y") == 1e-3
        assert cfg.get("a", "flag") is True
        assert cfg.get("a", "other") is False
        assert cfg.get("a", "name") == "upwind"
        assert cfg.get("a", "expr") == "(1+r)^(-3)"

    def test_lists(self):
        cfg = self.parse("[a]\nv = [1, 2, 3]\nw = [0.5 1.5]\nz = []\n")
        assert cfg.get("a", "v") == [1, 2, 3]
        assert cfg.get("a", "w") == [0.5, 1.5]
        assert cfg.get("a", "z") == []

    def test_comments_are_ignored(self):
        cfg = self.parse("# top\n[a]\n; note\nn = 1\n")
        assert cfg.get("a", "n") == 1

    @pytest.mark.parametrize(
        "text",
        [
            "[a]\nv = [1, 2\n",        # unterminated list
            '[a]\ns = "oops\n',        # unterminated quote
            "[a]\nv = 1 2 3\n",        # bare token with spaces
            "[a]\nv =\n",              # empty value
            "[a]\nn = 1\nn = 2\n",     # duplicate key
        ],
    )
    def test_malformed_values_raise(self, text):
        with pytest.raises(ConfigError):
            self.parse(text)

    def test_typed_access(self):
        cfg = self.parse("[a]\nn = 3\nx = 2.5\nflag = true\nname = abc\n")
        assert cfg.get("a", "n", kind="float") == 3.0  # int accepted as float
        assert cfg.get("a", "n", kind="list") == [3]   # scalar promoted
        with pytest.raises(ConfigError):
            cfg.get("a", "x", kind="int")
        with pytest.raises(ConfigError):
            cfg.get("a", "flag", kind="int")           # bool is not an int
        with pytest.raises(ConfigError):
            cfg.get("a", "name", kind="float")

    def test_missing_keys(self):
        cfg = self.parse("[a]\nn = 1\n")
        assert cfg.get("a", "absent", default=7) == 7
        with pytest.raises(ConfigError, match=r"\[a\] absent"):
            cfg.get("a", "absent")
        assert cfg.has("a", "n")
        assert not cfg.has("b")

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            RunConfig.from_file("/nonexistent/run.cfg")


SOLVE_CFG = """\
[geometry]
dim = 1
shape = 33
bounds = [0, 1]

[phi]
family = power
gamma = 0.5
p = 1.0

[experiment]
boundary = 1.0
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestCliSolve:
    def test_end_to_end(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["converged"] is True
        assert report["dim"] == 1
        assert report["identity_residual"] < 1e-8
        manifest = json.loads((out / "manifest.json").read_text())
        names = [a["name"] for a in manifest["artifacts"]]
        assert names == sorted(names)
        assert "solution.csv" in names
        assert "report.json" in names
        assert all(len(a["sha256"]) == 64 for a in manifest["artifacts"])

    def test_solution_csv_layout(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out = tmp_path / "out"
        main(["solve", "--config", str(cfg), "--out", str(out)])
        with open(out / "solution.csv") as fh:
            rows = [r for r in csv.reader(fh) if not r[0].startswith("#")]
        header, data = rows[0], rows[1:]
        assert header[0] == "x1"          # coordinates first
        assert header[-1] == "value"      # values last
        xs = np.array([float(r[0]) for r in data])
        assert np.all(np.diff(xs) > 0)    # row-major order on an interval
        # 17 significant digits round trip bit-for-bit
        vals = np.array([float(r[-1]) for r in data])
        assert np.all(np.isfinite(vals))
        assert vals.max() <= 1.0

    def test_determinism_modulo_timestamp(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["solve", "--config", str(cfg), "--out", str(out1)])
        main(["solve", "--config", str(cfg), "--out", str(out2)])
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m1["artifacts"] == m2["artifacts"]
        assert m1["config_sha256"] == m2["config_sha256"]

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG + "seed = 7\n")
        out = tmp_path / "out"
        main(["solve", "--config", str(cfg), "--out", str(out), "--seed", "99"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_seed_from_config_section(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG + "seed = 7\n")
        out = tmp_path / "out"
        main(["solve", "--config", str(cfg), "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7

    def test_verbose_runs(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out),
                     "--verbose"]) == 0


class TestCliExitCodes:
    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_missing_geometry_key(self, tmp_path):
        cfg = _write(tmp_path, "[geometry]\ndim = 1\n")
        assert main(["solve", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1

    def test_bad_expression(self, tmp_path):
        bad = SOLVE_CFG.replace('p = 1.0', 'p = "2*^3"')
        cfg = _write(tmp_path, bad)
        assert main(["solve", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1

    def test_hypothesis_failure_in_checks(self, tmp_path):
        text = SOLVE_CFG.replace("gamma = 0.5", "gamma = 3.0")
        cfg = _write(tmp_path, text)
        out = tmp_path / "o"
        assert main(["checks", "--config", str(cfg), "--out", str(out)]) == 2
        checks = json.loads((out / "checks.json").read_text())
        assert checks["failures"]

    def test_numeric_failure(self, tmp_path):
        text = SOLVE_CFG + "\n[solver]\ntol = 1e-14\nmax_iterations = 1\nstagnation_tol = 0\n"
        cfg = _write(tmp_path, text)
        assert main(["solve", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 3


class TestCliCommands:
    def test_checks_pass_for_sublinear(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out = tmp_path / "o"
        assert main(["checks", "--config", str(cfg), "--out", str(out)]) == 0
        checks = json.loads((out / "checks.json").read_text())
        assert checks["failures"] == []
        assert checks["m_matrix"]["is_m_matrix"] is True

    def test_majorant_command(self, tmp_path):
        cfg = _write(tmp_path, SOLVE_CFG)
        out = tmp_path / "o"
        assert main(["majorant", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["domination_defect"] >= -1e-12
        assert report["value_at_zero"] == 0.0
        assert (out / "psi_table.csv").exists()

    def test_blowup_command(self, tmp_path):
        text = SOLVE_CFG + "m_min = 1\nm_max = 100\nm_count = 5\n"
        cfg = _write(tmp_path, text)
        out = tmp_path / "o"
        assert main(["blowup", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["sweep"]["verdict"] in ("diverges", "saturates")
        with open(out / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "m"
        assert len(rows) == 6

    def test_exhaust_command(self, tmp_path):
        text = SOLVE_CFG.replace("shape = 33", "shape = 33\nlevels = 2")
        cfg = _write(tmp_path, text)
        out = tmp_path / "o"
        assert main(["exhaust", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["run"]["decreasing_ok"] is True
        assert (out / "levels.csv").exists()
        assert (out / "vc.csv").exists()
