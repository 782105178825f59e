"""Accuracy bookkeeping for class-incremental runs.

After each stage b the harness records A_b (top-1 accuracy over the test
rows of every class seen so far), the accuracy on the just-learned task, and
a lower-triangular per-task accuracy matrix. The run-level summary metrics
are the final A_B and the average of the per-stage accuracies.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import MetricError


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Top-1 accuracy in percent."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise MetricError(f"{predictions.shape} predictions vs {labels.shape} labels")
    if predictions.size == 0:
        raise MetricError("accuracy of an empty prediction set is undefined")
    return 100.0 * float(np.mean(predictions == labels))


def average_accuracy(stage_accuracy: Sequence[float]) -> float:
    """Arithmetic mean of the per-stage accuracies (percent)."""
    if len(stage_accuracy) == 0:
        raise MetricError("average accuracy of zero stages is undefined")
    return float(np.mean(stage_accuracy))


@dataclass
class StageRecord:
    """Everything measured at the end of one incremental stage."""

    stage: int
    task_classes: list[int]
    seen_classes: int
    a_b: float
    new_task_accuracy: float
    per_task_accuracy: list[float]
    wall_ms: float

    def metrics_dict(self) -> dict:
        """Stage metrics without timing, for determinism fingerprints."""
        return {
            "stage": self.stage,
            "task_classes": list(self.task_classes),
            "seen_classes": self.seen_classes,
            "a_b": self.a_b,
            "new_task_accuracy": self.new_task_accuracy,
            "per_task_accuracy": list(self.per_task_accuracy),
        }


@dataclass
class MetricsMatrix:
    """Per-stage accuracy series plus the lower-triangular task matrix."""

    stage_accuracy: list[float] = field(default_factory=list)
    new_task_accuracy: list[float] = field(default_factory=list)
    per_task_matrix: list[list[float]] = field(default_factory=list)

    @classmethod
    def from_stages(cls, stages: Sequence[StageRecord]) -> "MetricsMatrix":
        return cls(
            stage_accuracy=[s.a_b for s in stages],
            new_task_accuracy=[s.new_task_accuracy for s in stages],
            per_task_matrix=[list(s.per_task_accuracy) for s in stages],
        )

    @property
    def final_accuracy(self) -> float:
        if not self.stage_accuracy:
            raise MetricError("no stages recorded")
        return self.stage_accuracy[-1]

    @property
    def mean_accuracy(self) -> float:
        return average_accuracy(self.stage_accuracy)


def stage_csv(stages: Sequence[StageRecord]) -> str:
    """Render the per-stage table: stage, A_b, new-task accuracy, seen, wall."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["stage", "a_b", "new_task_acc", "seen_classes", "wall_ms"])
    for s in stages:
        writer.writerow([s.stage, f"{s.a_b:.6f}", f"{s.new_task_accuracy:.6f}",
                         s.seen_classes, f"{s.wall_ms:.3f}"])
    return buf.getvalue()


def write_stage_csv(stages: Sequence[StageRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(stage_csv(stages))
