"""Report assembly: delimited metric tables, structured JSON documents,
history persistence, and matplotlib figures rendered to files.

Numbers are written with ``repr`` so files are byte-reproducible and round-
trip at full precision. Figures use the Agg backend and a fixed size/dpi;
nothing here embeds a timestamp.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import TABLE_COLUMNS, roc_points
from .training import RunHistory

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "val_acc")


def _fmt(value: float) -> str:
    return repr(float(value))


def metrics_table(rows, paper_parity_auroc: bool = False) -> str:
    """CSV text for [(label, MetricSet), ...] in the canonical column order."""
    lines = ["," + ",".join(TABLE_COLUMNS)]
    for label, ms in rows:
        values = [_fmt(ms.value(col, paper_parity_auroc)) for col in TABLE_COLUMNS]
        lines.append(",".join([label] + values))
    return "\n".join(lines) + "\n"


def write_metrics_csv(path, rows, paper_parity_auroc: bool = False) -> Path:
    path = Path(path)
    path.write_text(metrics_table(rows, paper_parity_auroc))
    return path


def metrics_document(rows, paper_parity_auroc: bool = False) -> dict:
    """JSON-able structure carrying every metric, both AUROC forms, the
    degeneracy flags and the raw confusion counts."""
    entries = []
    for label, ms in rows:
        entry = {
            "label": label,
            "precision": ms.precision,
            "recall": ms.recall,
            "f1": ms.f1,
            "accuracy": ms.accuracy,
            "mcc": ms.mcc,
            "auroc_sweep": ms.auroc_sweep,
            "balanced_rate": ms.balanced_rate,
            "kappa": ms.kappa,
            "degenerate_flags": sorted(ms.degenerate_flags),
        }
        if ms.confusion is not None:
            c = ms.confusion
            entry["confusion"] = {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}
        entries.append(entry)
    return {
        "columns": list(TABLE_COLUMNS),
        "auroc_column_source": "balanced_rate" if paper_parity_auroc else "auroc_sweep",
        "rows": entries,
    }


def write_metrics_json(path, rows, paper_parity_auroc: bool = False) -> Path:
    path = Path(path)
    path.write_text(json.dumps(metrics_document(rows, paper_parity_auroc), indent=2) + "\n")
    return path


def write_history_csv(path, history: RunHistory) -> Path:
    """Columnar epoch table; wall-clock stays out on purpose (timestamps are
    confined to log files so reports stay byte-identical across runs)."""
    lines = [",".join(HISTORY_COLUMNS)]
    for epoch in range(history.n_epochs):
        lines.append(
            ",".join(
                [
                    str(epoch),
                    _fmt(history.train_loss[epoch]),
                    _fmt(history.val_loss[epoch]),
                    _fmt(history.val_acc[epoch]),
                ]
            )
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_history_csv(path) -> RunHistory:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != ",".join(HISTORY_COLUMNS):
        raise ValueError(f"not a history table: {path}")
    history = RunHistory()
    for line in lines[1:]:
        _, train_loss, val_loss, val_acc = line.split(",")
        history.train_loss.append(float(train_loss))
        history.val_loss.append(float(val_loss))
        history.val_acc.append(float(val_acc))
    if history.val_loss:
        history.best_epoch = int(np.argmin(history.val_loss))
    return history


def write_scores_csv(path, scores, labels, provenance) -> Path:
    lines = ["subject_id,clip_id,window_index,score,label"]
    for (subject, clip, window), score, label in zip(provenance, scores, labels):
        lines.append(f"{subject},{clip},{window},{_fmt(score)},{int(label)}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_scores_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    scores, labels = [], []
    for line in lines[1:]:
        parts = line.split(",")
        scores.append(float(parts[3]))
        labels.append(int(parts[4]))
    return np.asarray(scores), np.asarray(labels)


# -- figures -------------------------------------------------------------

_FIGURE_KW = dict(figsize=(6.0, 4.0), dpi=120)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png")
    plt.close(fig)
    return path


def fig_training_history(history: RunHistory, path) -> Path:
    fig, ax = plt.subplots(**_FIGURE_KW)
    epochs = np.arange(history.n_epochs)
    ax.plot(epochs, history.train_loss, label="train loss")
    ax.plot(epochs, history.val_loss, label="validation loss")
    ax.axvline(history.best_epoch, color="gray", linestyle=":", label="best epoch")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy")
    ax2 = ax.twinx()
    ax2.plot(epochs, history.val_acc, color="tab:green", alpha=0.6, label="validation accuracy")
    ax2.set_ylabel("accuracy")
    ax2.set_ylim(0.0, 1.02)
    handles1, labels1 = ax.get_legend_handles_labels()
    handles2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(handles1 + handles2, labels1 + labels2, loc="center right", fontsize=8)
    ax.set_title("Training history")
    fig.tight_layout()
    return _save(fig, path)


def fig_roc(scores, labels, path) -> Path:
    fpr, tpr = roc_points(scores, labels)
    fig, ax = plt.subplots(**_FIGURE_KW)
    ax.plot(fpr, tpr, drawstyle="default")
    ax.plot([0, 1], [0, 1], color="gray", linestyle=":")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("ROC curve")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    return _save(fig, path)


def fig_fold_accuracy(fold_accuracies, mean_accuracy: float, path) -> Path:
    fig, ax = plt.subplots(**_FIGURE_KW)
    xs = np.arange(len(fold_accuracies))
    ax.bar(xs, list(fold_accuracies), color="tab:blue", label="fold accuracy")
    ax.axhline(mean_accuracy, color="tab:red", linestyle="--", label="mean")
    ax.set_xticks(xs, [f"fold {i}" for i in xs])
    ax.set_ylim(0.0, 1.02)
    ax.set_ylabel("test accuracy")
    ax.set_title("Cross-validation accuracy by fold")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
