"""Tests for the command-line entry point."""

import pandas as pd
import pytest

from feederctl.cli import (
    EXIT_CERTIFICATE_FAILED,
    EXIT_CONFIG,
    EXIT_GAINS_EXCEED_BOUND,
    EXIT_OK,
    main,
)
from feederctl.presets import available_presets

CERTIFIED = [
    "--set", "controller.alpha=1e-6",
    "--set", "controller.r_dual=10",
    "--set", 'controller.gains={"lambda": 1, "mu": 1, "eta": 1, "psi": 1, "gamma": 1, "nu": 1, "zeta": 1}',
    "--set", 'controller.reg_coefficients={"lambda": 1, "mu": 1, "eta": 1, "psi": 1, "gamma": 1, "nu": 1, "zeta": 1}',
]


class TestPresets:
    def test_lists_every_preset(self, capsys):
        assert main(["presets"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in available_presets():
            assert name in out

    def test_help_lists_exit_codes(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["run", "--help"])
        assert excinfo.value.code == 0
        assert "exit codes" in capsys.readouterr().out


class TestConfigurationErrors:
    def test_missing_scenario_file(self, tmp_path, capsys):
        code = main(["run", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG
        assert "file not found" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "name": "broken",\n  "duration_s": ,\n}\n', encoding="utf-8")
        code = main(["certify", "--scenario", str(path), "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG
        assert "broken.json" in capsys.readouterr().err

    def test_unknown_override_key(self, tmp_path, capsys):
        code = main(
            ["run", "--scenario", "5bus-step-1ca", "--out", str(tmp_path), "--set", "controller.alpah=0.1"]
        )
        assert code == EXIT_CONFIG
        assert "alpah" in capsys.readouterr().err


class TestRunCommand:
    def test_writes_outputs(self, tmp_path, capsys):
        code = main(
            [
                "run",
                "--scenario", "5bus-step-1ca",
                "--out", str(tmp_path),
                "--set", "duration_s=1.0",
                "--set", "controller.alpha=0.003",
            ]
        )
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "timeseries.csv")
        assert len(frame) == 11
        assert {"time_s", "dp0_w", "ref_dp_w", "der_DER1_p_w"} <= set(frame.columns)
        summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
        assert "controller.alpha=0.003" in summary
        assert summary in capsys.readouterr().out
        assert (tmp_path / "metadata.json").exists()

    def test_cached_sensitivities_give_identical_run(self, tmp_path):
        cache = tmp_path / "cache"
        assert main(["linearize", "--scenario", "5bus-step-2ca", "--out", str(cache)]) == EXIT_OK
        assert (cache / "sensitivities.npz").exists()

        common = ["--scenario", "5bus-step-2ca", "--set", "duration_s=1.0"]
        assert main(["run", *common, "--out", str(tmp_path / "fresh")]) == EXIT_OK
        assert main(
            ["run", *common, "--out", str(tmp_path / "cached"), "--sensitivities", str(cache / "sensitivities.npz")]
        ) == EXIT_OK
        fresh = (tmp_path / "fresh" / "timeseries.csv").read_text(encoding="utf-8")
        cached = (tmp_path / "cached" / "timeseries.csv").read_text(encoding="utf-8")
        assert fresh == cached

    def test_sensitivities_for_another_tree(self, tmp_path, capsys):
        cache = tmp_path / "cache"
        assert main(["linearize", "--scenario", "5bus-step-1ca", "--out", str(cache)]) == EXIT_OK
        code = main(
            [
                "run",
                "--scenario", "5bus-step-2ca",
                "--out", str(tmp_path / "run"),
                "--sensitivities", str(cache / "sensitivities.npz"),
            ]
        )
        assert code == EXIT_CONFIG
        assert "covers areas" in capsys.readouterr().err


class TestCertifyCommand:
    def test_certified_gains(self, tmp_path, capsys):
        code = main(["certify", "--scenario", "5bus-step-1ca", "--out", str(tmp_path), *CERTIFIED])
        assert code == EXIT_OK
        assert (tmp_path / "certificate.json").exists()
        assert "lambda_min" in capsys.readouterr().out

    def test_gains_above_bound(self, tmp_path):
        overrides = CERTIFIED[2:] + ["--set", "controller.alpha=1000"]
        code = main(["certify", "--scenario", "5bus-step-1ca", "--out", str(tmp_path), *overrides])
        assert code == EXIT_GAINS_EXCEED_BOUND

    @pytest.mark.parametrize("form", ["printed", "derived"])
    def test_default_two_area_gains_fail(self, tmp_path, form):
        code = main(["certify", "--scenario", "5bus-step-2ca", "--out", str(tmp_path), "--form", form])
        assert code == EXIT_CERTIFICATE_FAILED
        assert "FAILED" in (tmp_path / "certificate.txt").read_text(encoding="utf-8")
