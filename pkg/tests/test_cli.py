"""Tests for the command surface, exit codes and run manifests."""

import json
import logging

import pytest

from src.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main, verify_manifest
from src.errors import InvariantBreachError
from src.observability import setup_logging, setup_observability

TINY = """
r0 = 2
steps = 12
layers = 1
heads = 3
d = 6
k = 6
planted_ranks = 1,2,3
n_samples = 16
eta_theta = 0.05
eta_alpha = 0.02
"""


@pytest.fixture
def tiny_conf(tmp_path):
    path = tmp_path / "tiny.conf"
    path.write_text(TINY)
    return path


class TestTrainCommand:
    def test_writes_verified_run(self, tiny_conf, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--config", str(tiny_conf), "--seed", "3", "--out", str(out)]) == EXIT_OK
        manifest = verify_manifest(out)
        assert manifest.seed == 3
        assert set(manifest.files) == {
            "summary.json",
            "adaptive/metrics.jsonl", "adaptive/ranks.csv",
            "uniform/metrics.jsonl", "uniform/ranks.csv",
        }
        assert manifest.config["seed"] == 3
        assert manifest.started_at <= manifest.finished_at

    def test_single_mode(self, tiny_conf, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--config", str(tiny_conf), "--out", str(out), "--mode", "uniform"]) == EXIT_OK
        assert not (out / "adaptive").exists()

    def test_out_dir_from_environment(self, tiny_conf, tmp_path, monkeypatch):
        monkeypatch.setenv("RANKSCALE_OUT_DIR", str(tmp_path / "env_runs"))
        assert main(["train", "--config", str(tiny_conf), "--mode", "adaptive"]) == EXIT_OK
        assert (tmp_path / "env_runs" / "manifest.json").is_file()

    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.conf"
        bad.write_text("r0 = 4\nlambda = -1\n")
        assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
        assert "lambda" in capsys.readouterr().out

    def test_negative_seed_exits_2(self, tiny_conf, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--config", str(tiny_conf), "--seed", "-1", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2
        assert "seed must be >= 0" in capsys.readouterr().err
        assert not (tmp_path / "x").exists()

    def test_negative_seed_in_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.conf"
        bad.write_text(TINY + "seed = -3\n")
        assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
        assert "seed" in capsys.readouterr().out

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--mode", "sideways"])
        assert exc.value.code == 2


class TestReportCommand:
    def test_clean_run(self, tiny_conf, tmp_path, capsys):
        out = tmp_path / "run"
        main(["train", "--config", str(tiny_conf), "--out", str(out)])
        assert main(["report", "--run", str(out)]) == EXIT_OK
        assert "artifacts match" in capsys.readouterr().out

    def test_tampered_artifact_exits_4(self, tiny_conf, tmp_path):
        out = tmp_path / "run"
        main(["train", "--config", str(tiny_conf), "--out", str(out)])
        with open(out / "adaptive" / "ranks.csv", "a") as fh:
            fh.write("999,0,0,1.0,2\n")
        assert main(["report", "--run", str(out)]) == EXIT_INVARIANT
        with pytest.raises(InvariantBreachError) as exc:
            verify_manifest(out)
        assert exc.value.details["mismatched"] == ["adaptive/ranks.csv"]

    def test_missing_manifest_exits_4(self, tmp_path):
        assert main(["report", "--run", str(tmp_path)]) == EXIT_INVARIANT

    def test_manifest_is_plain_json(self, tiny_conf, tmp_path):
        out = tmp_path / "run"
        main(["train", "--config", str(tiny_conf), "--out", str(out), "--mode", "adaptive"])
        data = json.loads((out / "manifest.json").read_text())
        assert {"config", "seed", "started_at", "finished_at", "versions", "files"} <= set(data)
        assert not list(out.glob(".manifest-*"))


class TestSweepCommand:
    def test_sweep(self, tiny_conf, tmp_path):
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(tiny_conf), "--r0", "1,2", "--out", str(out)]) == EXIT_OK
        assert "sweep.csv" in verify_manifest(out).files

    def test_bad_r0_list(self, tiny_conf):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--config", str(tiny_conf), "--r0", "1,x"])
        assert exc.value.code == 2


class TestObservability:
    def test_no_exporter_configured(self, monkeypatch):
        monkeypatch.delenv("OTEL_EXPORTER_OTLP_ENDPOINT", raising=False)
        monkeypatch.delenv("RANKSCALE_TRACE_CONSOLE", raising=False)
        monkeypatch.setenv("RANKSCALE_LOG_LEVEL", "warning")
        assert setup_observability() is False

    def test_bad_log_level_falls_back(self, monkeypatch, capsys):
        monkeypatch.setenv("RANKSCALE_LOG_LEVEL", "chatty")
        setup_logging()
        assert logging.getLogger().level == logging.INFO
        assert "RANKSCALE_LOG_LEVEL" in capsys.readouterr().out
