"""Tests for the rgn command line: config loading and every subcommand."""
import json
from pathlib import Path

import pytest
import yaml

from rgn.cli import _route_flat_keys, load_config, main
from rgn.data.features import save_features
from rgn.data.manifest import save_manifest
from rgn.errors import ConfigError
from rgn.training.trainer import CHECKPOINT_NAME


# ============================================================================
# Helpers
# ============================================================================

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

TINY_EXPERIMENT = {
    "synth": {"seed": 2, "n_families": 20, "d_raw": 8},
    "srgn": {"d": 8, "k": 1, "dims": [4]},
    "hrgn": {"d": 8, "latent": [2], "k": 1, "dims": [3]},
    "mlp": {"d": 8, "hidden": [4]},
    "train": {"iterations": 4, "batch_size": 8, "eval_every": 2},
}


def _write_yaml(path, payload) -> str:
    path.write_text(yaml.safe_dump(payload), encoding="utf-8")
    return str(path)


def _error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


# ============================================================================
# Configuration
# ============================================================================

class TestConfig:
    """YAML loading and flat-key routing."""

    def test_flat_keys_reach_every_declaring_section(self):
        routed = _route_flat_keys({"d": 16, "seed": 3, "srgn": {"d": 8}})
        assert routed["srgn"]["d"] == 8
        assert routed["hrgn"]["d"] == 16 and routed["mlp"]["d"] == 16
        assert routed["train"]["seed"] == 3 and routed["synth"]["seed"] == 3

    def test_unknown_flat_key(self):
        with pytest.raises(ConfigError):
            _route_flat_keys({"bogus": 1})

    def test_tri_subject_config_file(self):
        cfg = load_config(str(CONFIGS / "synth_tri.yaml"))
        assert cfg.srgn.subject_count == 3 and cfg.hrgn.subject_count == 3
        assert cfg.hrgn.d == 32 and cfg.synth.tri_subject

    def test_default_config_file(self):
        cfg = load_config(str(CONFIGS / "default.yaml"))
        assert cfg.hrgn.latent == [128, 16]
        assert cfg.train.epochs == 300

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "nope.yaml"))

    def test_non_mapping(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(_write_yaml(tmp_path / "c.yaml", [1, 2]))


# ============================================================================
# Commands
# ============================================================================

class TestCommands:
    """main() exit codes and outputs."""

    def test_count_macs(self, capsys):
        assert main(["count-macs", "--model", "srgn"]) == 0
        assert "total" in capsys.readouterr().out

    def test_count_macs_presets(self, tmp_path, capsys):
        assert main(["count-macs", "--model", "hrgn", "--presets", "--out", str(tmp_path)]) == 0
        reports = json.loads((tmp_path / "hrgn_macs.json").read_text())
        assert [r["config"]["latent"] for r in reports] == [[32], [128, 16], [128, 32, 8], [128, 32, 8, 2]]
        assert "layer 1: parent[1..512]" in capsys.readouterr().out

    def test_gradcheck(self):
        assert main(["gradcheck", "--model", "srgn"]) == 0
        assert main(["gradcheck", "--model", "mlp-baseline"]) == 0

    def test_gradcheck_cos_baseline(self, capsys):
        assert main(["gradcheck", "--model", "cos-baseline"]) == 2
        assert _error(capsys)["error"] == "ConfigError"

    def test_train_then_eval(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        out = tmp_path / "run"
        assert main(["train", "--config", config, "--model", "srgn", "--fold", "2", "--out", str(out)]) == 0
        record = json.loads(capsys.readouterr().out)
        assert [p["iteration"] for p in record["points"]] == [2, 4]
        assert (out / CHECKPOINT_NAME).exists()

        args = ["eval", "--config", config, "--model", "srgn", "--fold", "2", "--out", str(out)]
        assert main([*args, "--checkpoint", str(out / CHECKPOINT_NAME)]) == 0
        result = json.loads((out / "srgn_eval_fold2.json").read_text())
        assert 0.0 <= result["verification_rate"] <= 1.0

    def test_eval_rejects_mismatched_checkpoint(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        out = tmp_path / "run"
        assert main(["train", "--config", config, "--model", "srgn", "--out", str(out)]) == 0
        other = _write_yaml(tmp_path / "other.yaml", {**TINY_EXPERIMENT, "srgn": {"d": 8, "k": 1, "dims": [5]}})
        capsys.readouterr()
        code = main(["eval", "--config", other, "--model", "srgn", "--checkpoint", str(out / CHECKPOINT_NAME)])
        assert code == 2
        assert _error(capsys)["error"] == "CheckpointError"

    def test_train_rejects_cos_baseline(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        out = tmp_path / "run"
        assert main(["train", "--config", config, "--model", "cos-baseline", "--out", str(out)]) == 2
        assert _error(capsys)["error"] == "ConfigError"
        assert not (out / CHECKPOINT_NAME).exists()

    def test_eval_rejects_cos_baseline(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        out = tmp_path / "run"
        assert main(["train", "--config", config, "--model", "srgn", "--out", str(out)]) == 0
        capsys.readouterr()
        args = ["eval", "--config", config, "--model", "cos-baseline", "--out", str(out)]
        assert main([*args, "--checkpoint", str(out / CHECKPOINT_NAME)]) == 2
        assert _error(capsys)["error"] == "ConfigError"
        assert not list(out.glob("*_eval_fold*.json"))

    def test_crossval_from_files(self, tmp_path, small_synth):
        manifest, table = small_synth
        manifest_path = save_manifest(manifest, tmp_path / "pairs.jsonl")
        features_path = save_features(table, tmp_path / "features.ftb")
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        out = tmp_path / "cv"
        args = ["crossval", "--config", config, "--model", "cos-baseline", "--out", str(out)]
        assert main([*args, "--manifest", str(manifest_path), "--features", str(features_path)]) == 0
        assert (out / "cos-baseline_report.csv").exists()

    def test_manifest_without_features(self, tmp_path, capsys):
        assert main(["crossval", "--manifest", str(tmp_path / "pairs.jsonl")]) == 2
        assert _error(capsys)["error"] == "ConfigError"

    def test_unknown_config_key(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "bad.yaml", {"bogus": 1})
        assert main(["train", "--config", config]) == 2
        error = _error(capsys)
        assert error["error"] == "ConfigError" and "bogus" in error["message"]

    def test_invalid_config_value(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "bad.yaml", {"srgn": {"k": 3, "dims": [2]}})
        assert main(["train", "--config", config]) == 2
        assert _error(capsys)["error"] == "ValidationError"

    @pytest.mark.slow
    def test_synth_bench(self, tmp_path, capsys):
        config = _write_yaml(tmp_path / "tiny.yaml", TINY_EXPERIMENT)
        assert main(["synth-bench", "--config", config, "--out", str(tmp_path)]) == 0
        table = capsys.readouterr().out
        for kind in ("srgn", "hrgn", "mlp-baseline", "cos-baseline"):
            assert kind in table
