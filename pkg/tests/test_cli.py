"""End-to-end command surface: every subcommand, exit codes, reproducibility."""

import json
from pathlib import Path

import numpy as np
import pytest

from emoscale.cli import main
from emoscale.data import load_dataset
from emoscale.model import build, is_learnable, load_params

TINY_RUN = {
    "seed": 11,
    "synth": {
        "n_subjects": 2, "n_trials_per_subject": 5, "n_channels": 4,
        "fs": 32, "duration_s": 2.0,
    },
    "preprocess": {"window_samples": 32, "window_stride": 32},
    "model": {
        "ratios": [0.5, 0.25], "num_temporal_maps": 2, "num_spatial_maps": 2,
        "temporal_pool": 2, "spatial_pool": 2, "fusion_pool": 2,
        "hidden_units": 4, "dropout_rate": 0.0,
    },
    "train": {"epochs": 2, "batch_size": 8},
    "split": {"mode": "tvt"},
}


def write_config(tmp_path: Path, name: str = "run.json", **extra) -> Path:
    doc = json.loads(json.dumps(TINY_RUN))
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key].update(value)
        else:
            doc[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def tree_bytes(root: Path, skip=("log.txt",)) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in skip
    }


def synth_dataset(tmp_path: Path, config: Path) -> Path:
    out = tmp_path / "data"
    assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
    return out / "dataset" / "manifest.json"


class TestSynth:
    def test_default_output_loads(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        dataset = load_dataset(manifest)
        assert dataset.n_trials == 10

    def test_same_seed_identical_directories(self, tmp_path):
        config = write_config(tmp_path)
        main(["synth", "--config", str(config), "--out", str(tmp_path / "a")])
        main(["synth", "--config", str(config), "--out", str(tmp_path / "b")])
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_trial_arithmetic(self, tmp_path):
        config = write_config(
            tmp_path, synth={"n_subjects": 4, "n_trials_per_subject": 18}
        )
        manifest = synth_dataset(tmp_path, config)
        assert load_dataset(manifest).n_trials == 72


class TestPreprocess:
    def test_windows_written(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        out = tmp_path / "windows"
        rc = main([
            "preprocess", "--config", str(config),
            "--dataset", str(manifest), "--out", str(out),
        ])
        assert rc == 0
        doc = json.loads((out / "windows.json").read_text())
        assert doc["format_version"] == "emoscale-windows-v1"
        assert doc["n"] == 20  # 10 trials x 2 windows
        payload = (out / "windows.bin").read_bytes()
        assert len(payload) == doc["n"] * doc["channels"] * doc["window_samples"] * 4


class TestTrain:
    def test_emits_checkpoint_and_history(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        out = tmp_path / "run"
        rc = main([
            "train", "--config", str(config),
            "--dataset", str(manifest), "--out", str(out),
        ])
        assert rc == 0
        assert (out / "checkpoint" / "params.json").is_file()
        assert (out / "checkpoint" / "params.bin").is_file()
        history = (out / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,train_loss,val_loss,val_acc"
        assert len(history) == 3  # header + 2 epochs

    def test_missing_dataset_is_usage_error(self, tmp_path):
        config = write_config(tmp_path)
        rc = main(["train", "--config", str(config), "--out", str(tmp_path / "x")])
        assert rc != 0

    def test_zero_learning_rate_checkpoint_equals_init(self, tmp_path):
        config = write_config(tmp_path, train={"epochs": 2, "learning_rate": 0.0})
        manifest = synth_dataset(tmp_path, config)
        out = tmp_path / "run"
        main(["train", "--config", str(config), "--dataset", str(manifest),
              "--out", str(out)])
        params, cfg = load_params(out / "checkpoint")
        initial, _ = build(cfg, seed=11)
        for name in initial:
            if is_learnable(name):
                expected = initial[name].astype("<f4").astype(np.float64)
                assert np.array_equal(params[name], expected), name


class TestEval:
    @pytest.fixture
    def trained(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        run = tmp_path / "run"
        main(["train", "--config", str(config), "--dataset", str(manifest),
              "--out", str(run)])
        return config, manifest, run

    def test_report_columns_and_files(self, trained, tmp_path):
        config, manifest, run = trained
        out = tmp_path / "eval"
        rc = main([
            "eval", "--config", str(config), "--dataset", str(manifest),
            "--checkpoint", str(run / "checkpoint"), "--out", str(out),
        ])
        assert rc == 0
        header = (out / "metrics.csv").read_text().splitlines()[0]
        assert header == ",Precision,Recall,F1-score,Accuracy,MCC,AUROC,Kappa"
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["auroc_column_source"] == "auroc_sweep"
        assert (out / "scores.csv").is_file()

    def test_repeat_is_byte_identical(self, trained, tmp_path):
        config, manifest, run = trained
        for leaf in ("e1", "e2"):
            main([
                "eval", "--config", str(config), "--dataset", str(manifest),
                "--checkpoint", str(run / "checkpoint"),
                "--out", str(tmp_path / leaf),
            ])
        assert tree_bytes(tmp_path / "e1") == tree_bytes(tmp_path / "e2")

    def test_paper_parity_flag_switches_column(self, trained, tmp_path):
        config, manifest, run = trained
        out = tmp_path / "parity"
        main([
            "eval", "--config", str(config), "--dataset", str(manifest),
            "--checkpoint", str(run / "checkpoint"), "--out", str(out),
            "--paper-parity-auroc",
        ])
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["auroc_column_source"] == "balanced_rate"


class TestCv:
    def test_fold_rows_and_mean(self, tmp_path):
        config = write_config(tmp_path, split={"mode": "kfold", "k": 5})
        manifest = synth_dataset(tmp_path, config)
        out = tmp_path / "cv"
        rc = main([
            "cv", "--config", str(config), "--dataset", str(manifest),
            "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "cv_metrics.csv").read_text().splitlines()
        assert len(lines) == 7  # header + 5 folds + mean
        labels = [line.split(",")[0] for line in lines[1:]]
        assert labels == [f"fold {i}" for i in range(5)] + ["mean"]
        accuracy_col = lines[0].split(",").index("Accuracy")
        folds = [float(line.split(",")[accuracy_col]) for line in lines[1:6]]
        mean = float(lines[6].split(",")[accuracy_col])
        assert abs(mean - np.mean(folds)) < 1e-12

    def test_wrong_split_mode_rejected(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        rc = main(["cv", "--config", str(config), "--dataset", str(manifest),
                   "--out", str(tmp_path / "cv")])
        assert rc == 1


class TestGradcheck:
    def test_passes_and_writes_report(self, tmp_path, capsys):
        out = tmp_path / "g"
        rc = main(["gradcheck", "--out", str(out)])
        assert rc == 0
        assert "max relative error" in capsys.readouterr().out
        assert "PASS" in (out / "gradcheck.txt").read_text()

    def test_perturb_hook_fails(self, tmp_path):
        out = tmp_path / "g"
        rc = main(["gradcheck", "--out", str(out),
                   "--self-test-perturb", "fusion.weight"])
        assert rc == 1
        assert "FAIL" in (out / "gradcheck.txt").read_text()

    def test_dropout_refused(self, tmp_path):
        config = write_config(tmp_path, model={"dropout_rate": 0.5})
        rc = main(["gradcheck", "--config", str(config), "--out", str(tmp_path / "g")])
        assert rc == 1


class TestReport:
    def test_renders_figures_and_table(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        run = tmp_path / "run"
        main(["train", "--config", str(config), "--dataset", str(manifest),
              "--out", str(run)])
        main(["eval", "--config", str(config), "--dataset", str(manifest),
              "--checkpoint", str(run / "checkpoint"), "--out", str(run),
              "--eval-split", "all"])
        out = tmp_path / "figs"
        rc = main(["report", "--config", str(config), "--run", str(run),
                   "--out", str(out)])
        assert rc == 0
        assert (out / "history.png").is_file()
        assert (out / "roc.png").is_file()
        assert (out / "report.csv").is_file()

    def test_report_reruns_byte_identical(self, tmp_path):
        config = write_config(tmp_path)
        manifest = synth_dataset(tmp_path, config)
        run = tmp_path / "run"
        main(["train", "--config", str(config), "--dataset", str(manifest),
              "--out", str(run)])
        for leaf in ("r1", "r2"):
            main(["report", "--config", str(config), "--run", str(run),
                  "--out", str(tmp_path / leaf)])
        assert tree_bytes(tmp_path / "r1") == tree_bytes(tmp_path / "r2")

    def test_empty_run_dir_errors(self, tmp_path):
        (tmp_path / "empty").mkdir()
        rc = main(["report", "--run", str(tmp_path / "empty"),
                   "--out", str(tmp_path / "empty")])
        assert rc == 1

    def test_cv_fold_figure(self, tmp_path):
        config = write_config(tmp_path, split={"mode": "kfold", "k": 5})
        manifest = synth_dataset(tmp_path, config)
        run = tmp_path / "cv"
        main(["cv", "--config", str(config), "--dataset", str(manifest),
              "--out", str(run)])
        out = tmp_path / "figs"
        rc = main(["report", "--config", str(config), "--run", str(run),
                   "--out", str(out)])
        assert rc == 0
        assert (out / "cv_folds.png").is_file()


class TestConfigValidation:
    def test_unknown_top_level_key(self, tmp_path):
        config = write_config(tmp_path, optimizer="sgd")
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 1

    def test_unknown_section_key(self, tmp_path):
        config = write_config(tmp_path, train={"momentum": 0.9})
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 1

    def test_runtime_model_keys_rejected(self, tmp_path):
        config = write_config(tmp_path, model={"fs": 256})
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 1

    def test_flag_overrides_config_seed(self, tmp_path):
        config = write_config(tmp_path)
        main(["synth", "--config", str(config), "--seed", "12",
              "--out", str(tmp_path / "a")])
        main(["synth", "--config", str(config), "--seed", "12",
              "--out", str(tmp_path / "b")])
        main(["synth", "--config", str(config), "--out", str(tmp_path / "c")])
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
        assert tree_bytes(tmp_path / "a") != tree_bytes(tmp_path / "c")
