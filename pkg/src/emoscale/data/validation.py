"""Report-only dataset quality checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import Dataset, SCORE_NAMES


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    subject_id: str
    clip_id: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def valid(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    @property
    def errors(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.severity == "error")

    @property
    def warnings(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.severity == "warning")


def _scan_signal(issues: list, trial, kind: str, arr: np.ndarray) -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        chan, offset = np.argwhere(~finite)[0]
        value = arr[chan, offset]
        label = "NaN" if np.isnan(value) else "Inf"
        issues.append(
            Issue(
                "error",
                trial.subject_id,
                trial.clip_id,
                f"{label} sample in {kind} at channel {int(chan)}, offset {int(offset)}",
            )
        )
    flat = np.nonzero(np.nanstd(arr.astype(np.float64), axis=1) == 0.0)[0]
    for chan in flat:
        issues.append(
            Issue(
                "warning",
                trial.subject_id,
                trial.clip_id,
                f"zero variance on {kind} channel {int(chan)}",
            )
        )


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Scan for non-finite samples, flat channels, and score-range violations.

    Non-finite samples and out-of-range scores are errors; zero-variance
    channels are warnings (a flat channel is suspicious but loadable).
    """
    issues: list[Issue] = []
    for trial in dataset.trials:
        _scan_signal(issues, trial, "baseline", trial.baseline)
        _scan_signal(issues, trial, "stimulus", trial.stimulus)
        for name, value in zip(SCORE_NAMES, trial.scores()):
            if not 1 <= value <= 5:
                issues.append(
                    Issue(
                        "error",
                        trial.subject_id,
                        trial.clip_id,
                        f"{name} score {value} outside 1..5",
                    )
                )
    return ValidationReport(issues=tuple(issues))
