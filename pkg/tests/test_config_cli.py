"""Config parsing/round-trip and command-line behavior (exit codes, CSV)."""

import hashlib
import io
import json

import pytest

from hetnoma.cli import main
from hetnoma.config import ConfigError, dump_config, load_config, parse_config

TOY_CONFIG = {
    "tiers": [
        {"power_watts": 20.0, "intensity": 2e-5},
        {"power_watts": 2.0, "intensity": 1.8e-4},
    ],
    "user_intensity": 8e-4,
    "pathloss_exponent": 4.0,
    "sir_threshold": 1.0,
    "beta": [0.75, 0.75],
    "schemes": ["noncoop", "coop"],
    "sweep": {"variable": "user_intensity", "grid": [4e-4, 8e-4]},
    "seed": 7,
    "n_trials": 2,
    "window": {"half_width": 500.0, "margin": 120.0},
    "kernel_mode": "appendix",
}


def write_config(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run_cli(args):
    out = io.StringIO()
    code = main(args, out=out)
    return code, out.getvalue()


class TestConfigParsing:
    def test_round_trip_identity(self):
        cfg = parse_config(TOY_CONFIG)
        again = parse_config(json.loads(dump_config(cfg)))
        assert again == cfg

    def test_round_trip_preserves_awkward_floats(self):
        data = dict(TOY_CONFIG)
        data["user_intensity"] = 1.0000000000000002e-4
        data["beta"] = [2.0 / 3.0, 0.1 + 0.2]
        cfg = parse_config(data)
        assert parse_config(json.loads(dump_config(cfg))) == cfg

    def test_unknown_key_rejected(self):
        data = dict(TOY_CONFIG)
        data["powr"] = 3
        with pytest.raises(ConfigError, match="powr"):
            parse_config(data)
        data = dict(TOY_CONFIG)
        data["window"] = {"half_width": 500.0, "margin": 120.0, "shape": "disk"}
        with pytest.raises(ConfigError, match="window.shape"):
            parse_config(data)

    def test_missing_tiers_named(self):
        data = dict(TOY_CONFIG)
        del data["tiers"]
        with pytest.raises(ConfigError, match="tiers"):
            parse_config(data)

    def test_field_paths_in_errors(self):
        data = json.loads(json.dumps(TOY_CONFIG))
        data["tiers"][1]["intensity"] = 0.0
        with pytest.raises(ConfigError, match=r"tiers\[1\].intensity"):
            parse_config(data)
        data = dict(TOY_CONFIG)
        data["sweep"] = {"variable": "user_intensity", "grid": [2e-4, 1e-4]}
        with pytest.raises(ConfigError, match="sweep.grid"):
            parse_config(data)
        data = dict(TOY_CONFIG)
        data["kernel_mode"] = "both"
        with pytest.raises(ConfigError, match="kernel_mode"):
            parse_config(data)

    def test_scalar_beta_broadcasts(self):
        data = dict(TOY_CONFIG)
        data["beta"] = 0.8
        cfg = parse_config(data)
        assert cfg.params.beta == (0.8, 0.8)

    def test_defaults(self):
        cfg = parse_config({
            "tiers": [{"power_watts": 1.0, "intensity": 1e-4}],
            "user_intensity": 1e-4,
        })
        assert cfg.params.sir_threshold == 1.0
        assert cfg.params.pathloss_exponent == 4.0
        assert cfg.kernel_mode == "appendix"
        assert cfg.seed == 1 and cfg.n_trials == 20
        assert len(cfg.sweep_grid) == 8


class TestCliAnalytic:
    def test_report_values(self, tmp_path):
        # single tier with q = 1: frozen near/far at beta = 3/4
        path = write_config(tmp_path, {
            "tiers": [{"power_watts": 1.0, "intensity": 1e-4}],
            "user_intensity": 1e8,
            "beta": 0.75,
        })
        code, text = run_cli(["analytic", "--config", path])
        assert code == 0
        assert "near 0.474575" in text and "far 0.253861" in text
        assert "non-void probability q = 1.000000" in text

    def test_stock_two_tier_report(self, tmp_path):
        path = write_config(tmp_path, {
            "tiers": [
                {"power_watts": 20.0, "intensity": 1e-6},
                {"power_watts": 2.0, "intensity": 5e-5},
            ],
            "user_intensity": 5e-4,
            "beta": 0.75,
        })
        code, text = run_cli(["analytic", "--config", path])
        assert code == 0
        assert "cell load L = 9.803922" in text
        assert "non-void probability q = 0.990661" in text
        assert "near 0.837023" in text and "far 0.748966" in text  # macro
        assert "near 0.462501" in text and "far 0.240038" in text  # pico

    def test_invalid_beta_flagged(self, tmp_path):
        path = write_config(tmp_path, {
            "tiers": [{"power_watts": 1.0, "intensity": 1e-4}],
            "user_intensity": 1e8,
            "beta": 0.5,
        })
        code, text = run_cli(["analytic", "--config", path])
        assert code == 0
        assert "invalid power allocation: beta <= theta/(1+theta)" in text

    def test_missing_tiers_exits_2(self, tmp_path, capsys):
        path = write_config(tmp_path, {"user_intensity": 1e-4})
        code, _ = run_cli(["analytic", "--config", path])
        assert code == 2
        assert "tiers" in capsys.readouterr().err

    def test_theorem_mode_divergence_exits_3(self, tmp_path, capsys):
        path = write_config(tmp_path, {
            "tiers": [{"power_watts": 1.0, "intensity": 1e-4}],
            "user_intensity": 1e-4,   # q < 1
            "beta": 0.75,
        })
        code, _ = run_cli(["analytic", "--config", path, "--kernel-mode", "theorem"])
        assert code == 3
        assert "diverges" in capsys.readouterr().err


class TestCliSim:
    def test_csv_contract_and_determinism(self, tmp_path):
        import time

        cfg = dict(TOY_CONFIG)
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        path = write_config(tmp_path, cfg)
        t0 = time.perf_counter()
        code, _ = run_cli(["sim", "--config", path, "--out", out1])
        assert code == 0
        assert time.perf_counter() - t0 < 60.0  # smoke-scale budget
        code, _ = run_cli(["sim", "--config", path, "--out", out2])
        assert code == 0
        data1 = open(out1, "rb").read()
        assert hashlib.sha256(data1).digest() == hashlib.sha256(open(out2, "rb").read()).digest()
        lines = data1.decode().splitlines()
        assert lines[0] == "sweep_value,tier,role,scheme,analytic,simulated,ci_halfwidth,n_samples,flags"
        # 1 grid point x 2 tiers x 2 roles x 2 schemes
        assert len(lines) == 1 + 4 * len(cfg["schemes"])

    def test_seed_override_changes_output(self, tmp_path):
        path = write_config(tmp_path, TOY_CONFIG)
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run_cli(["sim", "--config", path, "--out", out1, "--seed", "7"])
        run_cli(["sim", "--config", path, "--out", out2, "--seed", "8"])
        assert open(out1).read() != open(out2).read()

    def test_noncoop_only_row_count(self, tmp_path):
        cfg = dict(TOY_CONFIG)
        cfg["schemes"] = ["noncoop"]
        out = str(tmp_path / "n.csv")
        path = write_config(tmp_path, cfg)
        code, _ = run_cli(["sim", "--config", path, "--out", out])
        assert code == 0
        assert len(open(out).read().splitlines()) == 1 + 4

    def test_unwritable_output_reports_path(self, tmp_path, capsys):
        path = write_config(tmp_path, TOY_CONFIG)
        bad = str(tmp_path / "no_such_dir" / "x.csv")
        code, _ = run_cli(["sim", "--config", path, "--out", bad])
        assert code == 1
        assert "no_such_dir" in capsys.readouterr().err


class TestCliSweep:
    def test_sweep_csv(self, tmp_path):
        cfg = dict(TOY_CONFIG)
        cfg["n_trials"] = 1
        out = str(tmp_path / "sweep.csv")
        path = write_config(tmp_path, cfg)
        code, text = run_cli(["sweep", "--config", path, "--out", out])
        assert code == 0
        lines = open(out).read().splitlines()
        assert len(lines) == 1 + 2 * 2 * 2 * 2  # grid x tiers x roles x schemes
        assert "max |analytic - simulated|" in text

    def test_trials_override(self, tmp_path):
        cfg = dict(TOY_CONFIG)
        out = str(tmp_path / "s.csv")
        path = write_config(tmp_path, cfg)
        code, _ = run_cli(["sweep", "--config", path, "--out", out, "--trials", "1"])
        assert code == 0
        row = open(out).read().splitlines()[1].split(",")
        n_samples = int(row[7])
        assert n_samples < 400  # one toy trial collects far fewer cells


class TestCliOptimizeBeta:
    def test_report_and_scan_csv(self, tmp_path):
        out = str(tmp_path / "beta.csv")
        path = write_config(tmp_path, {
            "tiers": [{"power_watts": 1.0, "intensity": 1e-4}],
            "user_intensity": 1e8,
            "beta": 0.75,
            "schemes": ["noncoop"],
        })
        code, text = run_cli(["optimize-beta", "--config", path, "--out", out])
        assert code == 0
        assert "beta* = 0.766" in text
        assert "beta,tier,scheme,avg_coverage" in text
        lines = open(out).read().splitlines()
        assert lines[0] == "beta,tier,scheme,avg_coverage"
        assert len(lines) == 1 + 32
