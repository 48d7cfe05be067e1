"""Training behavior: overfitting, determinism, degenerate configs, export."""

import json
import shutil
import subprocess
import sys

import pytest
import torch

from afmrecon import (
    DataError,
    InvalidConfig,
    ModelConfig,
    export_predictions,
    load_bundle,
    load_checkpoint,
    train,
)
from afmrecon.train import CHECKPOINT_NAME, REPORT_NAME


def desk_config(**overrides) -> ModelConfig:
    overrides.setdefault("batch_size", 4)
    return ModelConfig.desk(**overrides)


class TestDegenerateRuns:
    def test_zero_epochs_reports_empty_history(self, dataset_dir, tmp_path):
        report = train(dataset_dir, tmp_path, desk_config(seed=1, epochs=0))
        assert report.epochs_run == 0
        assert report.history == []
        assert report.split_iou == {}
        assert not (tmp_path / CHECKPOINT_NAME).exists()
        saved = json.loads((tmp_path / REPORT_NAME).read_text())
        assert saved["history"] == []

    def test_zero_learning_rate_keeps_loss_constant(self, dataset_dir, tmp_path):
        config = desk_config(seed=2, epochs=3, learning_rate=0.0, batch_size=16)
        report = train(dataset_dir, tmp_path, config)
        losses = [e.train_loss for e in report.history]
        assert len(losses) == 3
        assert max(losses) - min(losses) < 1e-6

    def test_too_many_views_requested(self, dataset_dir, tmp_path):
        with pytest.raises(InvalidConfig, match="views"):
            train(dataset_dir, tmp_path, desk_config(seed=3, epochs=1, n_views=5))

    def test_missing_dataset_fails_before_training(self, tmp_path):
        with pytest.raises(DataError):
            train(tmp_path / "nowhere", tmp_path / "out", desk_config(epochs=1))

    def test_corrupt_voxel_file_fails_before_training(self, dataset_dir, tmp_path):
        clone = tmp_path / "clone"
        shutil.copytree(dataset_dir, clone)
        victim = next(clone.glob("*/voxel_32.afmv"))
        raw = bytearray(victim.read_bytes())
        raw[-1] ^= 0xFF
        victim.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            train(clone, tmp_path / "out", desk_config(epochs=1))


class TestDeterminism:
    def test_first_epoch_reproducible(self, dataset_dir, tmp_path):
        config = desk_config(seed=9, epochs=1)
        first = train(dataset_dir, tmp_path / "a", config)
        second = train(dataset_dir, tmp_path / "b", config)
        assert first.history[0].train_loss == second.history[0].train_loss
        assert first.history[0].train_iou == second.history[0].train_iou
        assert first.history[0].val_iou == second.history[0].val_iou

    def test_different_seeds_diverge(self, dataset_dir, tmp_path):
        base = train(dataset_dir, tmp_path / "a", desk_config(seed=9, epochs=1))
        other = train(dataset_dir, tmp_path / "b", desk_config(seed=10, epochs=1))
        assert base.history[0].train_loss != other.history[0].train_loss


@pytest.fixture(scope="module")
def overfit_run(dataset_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("overfit")
    report = train(
        dataset_dir,
        out,
        desk_config(seed=7, epochs=300),
        stop_at_train_iou=0.85,
    )
    return out, report


class TestOverfit:
    def test_reaches_085_train_iou(self, overfit_run):
        _, report = overfit_run
        best = max(e.train_iou for e in report.history)
        assert report.epochs_run <= 300
        assert best >= 0.85, (
            f"train IoU peaked at {best:.4f} after {report.epochs_run} epochs"
        )

    def test_history_values_well_formed(self, overfit_run):
        _, report = overfit_run
        for stats in report.history:
            assert 0.0 <= stats.train_iou <= 1.0
            assert 0.0 <= stats.val_iou <= 1.0
            assert stats.train_loss >= 0.0
        assert [e.epoch for e in report.history] == list(range(report.epochs_run))

    def test_report_and_checkpoint_written(self, overfit_run):
        out, report = overfit_run
        assert (out / CHECKPOINT_NAME).exists()
        saved = json.loads((out / REPORT_NAME).read_text())
        assert saved["param_count"] == report.param_count
        assert saved["config"]["seed"] == 7
        assert set(saved["split_iou_by_views"]) == {"train", "val"}
        assert set(saved["split_iou_by_views"]["train"]) == {"1", "2", "3"}

    def test_exported_predictions_pass_external_eval(
        self, overfit_run, dataset_dir, tmp_path
    ):
        out, report = overfit_run
        model = load_checkpoint(out / CHECKPOINT_NAME)
        bundle = load_bundle(dataset_dir)
        written = export_predictions(model, bundle, tmp_path / "preds")
        assert len(written) == len(bundle.entries)

        report_path = tmp_path / "eval.json"
        cmd = [
            sys.executable, "-m", "vafm", "eval",
            "--input", str(dataset_dir / "manifest.jsonl"),
            "--predictions", str(tmp_path / "preds"),
            "--out", str(report_path),
        ]
        result = subprocess.run(cmd, capture_output=True, text=True,
                                cwd=dataset_dir)
        assert result.returncode == 0, result.stderr
        external = json.loads(report_path.read_text())
        assert abs(external["split_means"]["train"]
                   - report.split_iou["train"]) < 1e-6


class TestCli:
    def test_main_trains_and_writes_report(self, dataset_dir, tmp_path):
        from afmrecon.train import main

        out = tmp_path / "run"
        rc = main([
            str(dataset_dir), str(out),
            "--epochs", "1", "--width", "0.0625",
            "--batch-size", "8", "--seed", "4",
        ])
        assert rc == 0
        assert (out / REPORT_NAME).exists()
        assert (out / CHECKPOINT_NAME).exists()

    def test_checkpoint_round_trip(self, dataset_dir, tmp_path):
        config = desk_config(seed=6, epochs=1)
        train(dataset_dir, tmp_path, config)
        model = load_checkpoint(tmp_path / CHECKPOINT_NAME)
        assert model.config == config
        with torch.no_grad():
            out = model(torch.rand(2, 224, 224, 3))
        assert out.shape == (32, 32, 32)
