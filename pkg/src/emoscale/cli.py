"""Operator command surface.

One JSON config file drives every subcommand; command-line flags override
config values. Reports and artifacts are always written to files under the
output directory; timestamps are confined to ``log.txt`` so everything else
is byte-reproducible given the same config and seed.

Subcommands: synth | preprocess | train | eval | cv | gradcheck | report.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import (
    ClassTone,
    Dataset,
    DatasetError,
    SynthConfig,
    load_dataset,
    synth_generate,
    validate_dataset,
    write_dataset,
)
from .metrics import metric_set
from .model import (
    CheckpointError,
    ModelConfig,
    load_params,
    run_gradient_check,
    save_params,
    tiny_gradcheck_config,
)
from .preprocess import PreprocessConfig, build_windows
from .report import (
    fig_fold_accuracy,
    fig_roc,
    fig_training_history,
    read_history_csv,
    read_scores_csv,
    write_history_csv,
    write_metrics_csv,
    write_metrics_json,
    write_scores_csv,
)
from .training import (
    SplitSpec,
    TrainConfig,
    TrainingDiverged,
    evaluate,
    run_cv,
    split_tvt,
    train,
)

WINDOWS_FORMAT_VERSION = "emoscale-windows-v1"

_TOP_LEVEL_KEYS = {
    "dataset", "out", "seed", "target", "paper_parity_auroc",
    "synth", "preprocess", "model", "train", "split",
}
_MODEL_RUNTIME_KEYS = {"fs", "channels", "window_samples"}


class CliError(Exception):
    """A user-facing command failure (bad config, missing input, ...)."""


@dataclass
class RunConfig:
    dataset: str | None = None
    out: str = "runs"
    seed: int = 0
    target: str = "valence"
    paper_parity_auroc: bool = False
    synth: SynthConfig = field(default_factory=SynthConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    model_overrides: dict = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)

    def model_config(self, dataset: Dataset) -> ModelConfig:
        return ModelConfig(
            fs=dataset.fs,
            channels=dataset.layout.n_channels,
            window_samples=self.preprocess.window_samples,
            **self.model_overrides,
        )


def _known_fields(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _section(raw: dict, name: str, cls, seed: int, seeded: bool):
    section = dict(raw.get(name, {}))
    allowed = _known_fields(cls)
    unknown = set(section) - allowed
    if unknown:
        raise CliError(f"unknown {name} config keys: {sorted(unknown)}")
    if seeded and "seed" not in section:
        section["seed"] = seed
    return section


def _parse_class_rule(raw) -> dict[str, dict[int, ClassTone]]:
    rule = {}
    for target, mapping in raw.items():
        rule[target] = {
            int(label): ClassTone(float(tone[0]), float(tone[1]), tuple(int(c) for c in tone[2]))
            for label, tone in mapping.items()
        }
    return rule


def load_run_config(path: str | None, overrides: dict) -> RunConfig:
    """Read the JSON config (if any) and fold in command-line overrides.

    Unknown keys are rejected everywhere; flags win over file values; section
    seeds default to the global seed.
    """
    raw: dict = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise CliError(f"config file not found: {config_path}")
        try:
            raw = json.loads(config_path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(f"config is not valid JSON: {exc}") from exc
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value

    seed = int(raw.get("seed", 0))
    synth_kwargs = _section(raw, "synth", SynthConfig, seed, seeded=True)
    if "class_rule" in synth_kwargs and synth_kwargs["class_rule"] is not None:
        synth_kwargs["class_rule"] = _parse_class_rule(synth_kwargs["class_rule"])
    pre_kwargs = _section(raw, "preprocess", PreprocessConfig, seed, seeded=False)
    train_kwargs = _section(raw, "train", TrainConfig, seed, seeded=True)
    split_kwargs = _section(raw, "split", SplitSpec, seed, seeded=True)
    if "tvt_fractions" in split_kwargs:
        split_kwargs["tvt_fractions"] = tuple(split_kwargs["tvt_fractions"])

    model_overrides = dict(raw.get("model", {}))
    bad = set(model_overrides) & _MODEL_RUNTIME_KEYS
    if bad:
        raise CliError(
            f"model config keys {sorted(bad)} are derived from the dataset and "
            "preprocess sections; remove them"
        )
    unknown = set(model_overrides) - (_known_fields(ModelConfig) - _MODEL_RUNTIME_KEYS)
    if unknown:
        raise CliError(f"unknown model config keys: {sorted(unknown)}")
    if "ratios" in model_overrides:
        model_overrides["ratios"] = tuple(model_overrides["ratios"])

    # precedence: --target flag > train-section target > top-level target
    if overrides.get("target") is not None:
        train_kwargs["target"] = overrides["target"]
    elif "target" not in train_kwargs and "target" in raw:
        train_kwargs["target"] = raw["target"]
    target = train_kwargs.get("target", "valence")

    try:
        return RunConfig(
            dataset=raw.get("dataset"),
            out=str(raw.get("out", "runs")),
            seed=seed,
            target=target,
            paper_parity_auroc=bool(raw.get("paper_parity_auroc", False)),
            synth=SynthConfig(**synth_kwargs),
            preprocess=PreprocessConfig(**pre_kwargs),
            model_overrides=model_overrides,
            train=TrainConfig(**train_kwargs),
            split=SplitSpec(**split_kwargs),
        )
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}") from exc


def _log(out_dir: Path, message: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y-%m-%d %H:%M:%S")
    with (out_dir / "log.txt").open("a") as fh:
        fh.write(f"[{stamp}] {message}\n")


def _require_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is None:
        raise CliError("no dataset path given; set it in the config or pass --dataset")
    return load_dataset(cfg.dataset)


# -- subcommands ---------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    dataset = synth_generate(cfg.synth)
    manifest = write_dataset(dataset, out / "dataset")
    _log(out, f"synth: wrote {dataset.n_trials} trials to {manifest}")
    print(manifest)
    return 0


def cmd_preprocess(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    dataset = _require_dataset(cfg)
    report = validate_dataset(dataset)
    if not report.valid:
        details = "; ".join(
            f"{i.subject_id}/{i.clip_id}: {i.message}" for i in report.errors
        )
        raise CliError(f"dataset failed validation: {details}")
    batch = build_windows(dataset, cfg.preprocess)
    out.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(batch.x, dtype="<f4").tobytes()
    (out / "windows.bin").write_bytes(payload)
    manifest = {
        "format_version": WINDOWS_FORMAT_VERSION,
        "n": len(batch),
        "channels": int(batch.x.shape[2]),
        "window_samples": int(batch.x.shape[3]),
        "x_file": "windows.bin",
        "dtype": "<f4",
        "y_valence": batch.y_valence.tolist(),
        "y_arousal": batch.y_arousal.tolist(),
        "y_dominance": batch.y_dominance.tolist(),
        "provenance": [list(p) for p in batch.provenance],
    }
    (out / "windows.json").write_text(json.dumps(manifest, indent=2) + "\n")
    _log(out, f"preprocess: {len(batch)} windows from {dataset.n_trials} trials")
    print(out / "windows.json")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    dataset = _require_dataset(cfg)
    if cfg.split.mode != "tvt":
        raise CliError("train uses the tvt split; run `cv` for cross-validation")
    train_idx, val_idx, test_idx = split_tvt(dataset, cfg.split)
    model_cfg = cfg.model_config(dataset)
    params, history = train(
        dataset, (train_idx, val_idx), model_cfg, cfg.train, cfg.preprocess
    )
    ckpt = save_params(params, model_cfg, out / "checkpoint")
    write_history_csv(out / "history.csv", history)
    _log(
        out,
        f"train[{cfg.train.target}]: {history.n_epochs} epochs, "
        f"best {history.best_epoch} (val loss {history.val_loss[history.best_epoch]:.4f}), "
        f"splits {len(train_idx)}/{len(val_idx)}/{len(test_idx)} trials",
    )
    print(ckpt)
    return 0


_SPLIT_SETS = ("train", "val", "test", "all")


def cmd_eval(cfg: RunConfig, checkpoint: str, split_set: str) -> int:
    out = Path(cfg.out)
    dataset = _require_dataset(cfg)
    model_cfg = cfg.model_config(dataset)
    params, _ = load_params(checkpoint, expected_cfg=model_cfg)
    if split_set == "all":
        trial_idx = np.arange(dataset.n_trials)
    else:
        parts = dict(zip(("train", "val", "test"), split_tvt(dataset, cfg.split)))
        trial_idx = parts[split_set]
    scores, labels, provenance = evaluate(
        params, model_cfg, dataset, trial_idx, cfg.train.target, cfg.preprocess
    )
    ms = metric_set(scores, labels)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(f"{cfg.train.target}/{split_set}", ms)]
    write_metrics_csv(out / "metrics.csv", rows, cfg.paper_parity_auroc)
    write_metrics_json(out / "metrics.json", rows, cfg.paper_parity_auroc)
    write_scores_csv(out / "scores.csv", scores, labels, provenance)
    _log(out, f"eval[{cfg.train.target}/{split_set}]: accuracy {ms.accuracy:.4f}")
    print(out / "metrics.csv")
    return 0


def cmd_cv(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    dataset = _require_dataset(cfg)
    if cfg.split.mode != "kfold":
        raise CliError("cv needs split mode kfold; run `train` for the tvt protocol")
    model_cfg = cfg.model_config(dataset)
    fold_sets, mean_set = run_cv(dataset, model_cfg, cfg.train, cfg.split, cfg.preprocess)
    rows = [(f"fold {i}", ms) for i, ms in enumerate(fold_sets)]
    rows.append(("mean", mean_set))
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "cv_metrics.csv", rows, cfg.paper_parity_auroc)
    write_metrics_json(out / "cv_metrics.json", rows, cfg.paper_parity_auroc)
    _log(out, f"cv[{cfg.train.target}]: mean accuracy {mean_set.accuracy:.4f}")
    print(out / "cv_metrics.csv")
    return 0


def cmd_gradcheck(cfg: RunConfig, perturb: str | None) -> int:
    out = Path(cfg.out)
    overrides = dict(cfg.model_overrides)
    check_cfg = tiny_gradcheck_config(**overrides)
    if check_cfg.dropout_rate > 0:
        raise CliError(
            "gradient check requires dropout_rate 0 (a random dropout mask has "
            "no finite-difference counterpart); remove the dropout override"
        )
    report = run_gradient_check(check_cfg, seed=cfg.seed, perturb_tensor=perturb)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"parameters checked: {report.n_parameters}",
        f"max relative error: {report.max_rel_err:.3e} (tolerance {report.tolerance:.1e})",
        f"worst tensor: {report.worst_tensor}",
        f"result: {'PASS' if report.passed else 'FAIL'}",
    ]
    (out / "gradcheck.txt").write_text("\n".join(lines) + "\n")
    _log(out, f"gradcheck: {'PASS' if report.passed else 'FAIL'} ({report.seconds:.1f}s)")
    print("\n".join(lines))
    return 0 if report.passed else 1


def cmd_report(cfg: RunConfig, run_dir: str | None) -> int:
    """Render figures for whatever artifacts a run directory holds, plus a
    consolidated delimited table."""
    run = Path(run_dir) if run_dir else Path(cfg.out)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    produced = []
    if (run / "history.csv").is_file():
        history = read_history_csv(run / "history.csv")
        produced.append(fig_training_history(history, out / "history.png"))
    if (run / "scores.csv").is_file():
        scores, labels = read_scores_csv(run / "scores.csv")
        if len(set(labels.tolist())) == 2:
            produced.append(fig_roc(scores, labels, out / "roc.png"))
        rows = [("scores", metric_set(scores, labels))]
        produced.append(write_metrics_csv(out / "report.csv", rows, cfg.paper_parity_auroc))
    if (run / "cv_metrics.json").is_file():
        doc = json.loads((run / "cv_metrics.json").read_text())
        folds = [r["accuracy"] for r in doc["rows"] if r["label"].startswith("fold")]
        means = [r["accuracy"] for r in doc["rows"] if r["label"] == "mean"]
        if folds and means:
            produced.append(fig_fold_accuracy(folds, means[0], out / "cv_folds.png"))
    if not produced:
        raise CliError(
            f"nothing to report in {run}: expected history.csv, scores.csv, "
            "or cv_metrics.json"
        )
    _log(out, f"report: wrote {', '.join(p.name for p in produced)}")
    for p in produced:
        print(p)
    return 0


# -- argument parsing ------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emoscale",
        description="EEG emotion-recognition pipeline: synthesize, preprocess, "
        "train, evaluate, cross-validate, gradient-check, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, dataset_flag: bool = False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int, help="global seed override")
        p.add_argument("--out", help="output directory")
        p.add_argument(
            "--target", choices=("valence", "arousal", "dominance"),
            help="rating target override",
        )
        p.add_argument(
            "--paper-parity-auroc", action="store_true", default=None,
            help="report the single-threshold balanced rate in the AUROC column",
        )
        if dataset_flag:
            p.add_argument("--dataset", help="dataset manifest path override")
        return p

    add("synth", "generate a synthetic dataset")
    add("preprocess", "window + normalize a dataset to disk", dataset_flag=True)
    add("train", "train one binary model on the tvt split", dataset_flag=True)
    p_eval = add("eval", "evaluate a checkpoint and write metric reports", dataset_flag=True)
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p_eval.add_argument(
        "--eval-split", choices=_SPLIT_SETS, default="test",
        help="which tvt subset to evaluate",
    )
    add("cv", "five-fold cross-validation with per-fold reports", dataset_flag=True)
    p_grad = add("gradcheck", "finite-difference gradient verification")
    p_grad.add_argument(
        "--self-test-perturb", metavar="TENSOR", default=None,
        help="test hook: corrupt one analytic gradient to confirm detection",
    )
    p_report = add("report", "render figures + tables from a run directory")
    p_report.add_argument("--run", help="run directory to read (default: --out)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "target": args.target,
        "paper_parity_auroc": args.paper_parity_auroc,
        "dataset": getattr(args, "dataset", None),
    }
    try:
        cfg = load_run_config(args.config, overrides)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.checkpoint, args.eval_split)
        if args.command == "cv":
            return cmd_cv(cfg)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg, args.self_test_perturb)
        if args.command == "report":
            return cmd_report(cfg, args.run)
        raise CliError(f"unknown command {args.command}")
    except (CliError, DatasetError, CheckpointError, TrainingDiverged, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
