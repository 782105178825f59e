"""Class-incremental task sequences with disjoint per-task label sets.

A scenario schedules every class of a dataset exactly once: an optional base
session of ``base_size`` classes, then sessions of ``increment`` classes each
(the final session takes whatever remainder is left). Row indices into the
train/test datasets are precomputed per task.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, ConsistencyError
from .linalg import SeededRng, rng_shuffle


@dataclass(frozen=True)
class TaskSplit:
    task_index: int
    class_ids: tuple[int, ...]
    train_rows: np.ndarray
    test_rows: np.ndarray


@dataclass(frozen=True)
class Scenario:
    class_order: tuple[int, ...]
    base_size: int
    increment: int
    num_classes: int
    tasks: tuple[TaskSplit, ...]

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def seen_classes(self, through_task: int) -> set[int]:
        """Union of class ids of tasks 0..=through_task."""
        if not 0 <= through_task < len(self.tasks):
            raise IndexError(f"task {through_task} out of range (have {len(self.tasks)})")
        seen: set[int] = set()
        for task in self.tasks[: through_task + 1]:
            seen.update(task.class_ids)
        return seen

    def fingerprint(self) -> dict:
        """Identity of the schedule, used to decide run comparability."""
        return {
            "class_order": list(self.class_order),
            "base_size": self.base_size,
            "increment": self.increment,
            "num_classes": self.num_classes,
        }


def _rows_for(labels: np.ndarray, class_ids: tuple[int, ...]) -> np.ndarray:
    return np.flatnonzero(np.isin(labels, class_ids)).astype(np.int64)


def build_scenario(
    train: LabeledDataset,
    test: LabeledDataset,
    base_size: int,
    increment: int,
    class_order_seed: Optional[int] = None,
) -> Scenario:
    """Partition the label space into an ordered task sequence.

    Class order defaults to ascending label ids; with ``class_order_seed`` it
    is a seeded permutation instead, enabling order-robustness studies.
    """
    if train.num_classes != test.num_classes:
        raise ConsistencyError(
            f"train has {train.num_classes} classes, test has {test.num_classes}"
        )
    num_classes = train.num_classes
    if increment < 1:
        raise ConfigError("scenario.increment", f"must be >= 1, got {increment}")
    if base_size < 0:
        raise ConfigError("scenario.base_size", f"must be >= 0, got {base_size}")
    if base_size + increment > num_classes:
        raise ConfigError(
            "scenario.base_size",
            f"base_size + increment = {base_size + increment} exceeds {num_classes} classes",
        )

    if class_order_seed is None:
        order = list(range(num_classes))
    else:
        perm = rng_shuffle(SeededRng(class_order_seed), num_classes)
        order = [int(i) for i in perm]

    chunks: list[tuple[int, ...]] = []
    cursor = 0
    if base_size > 0:
        chunks.append(tuple(order[:base_size]))
        cursor = base_size
    while cursor < num_classes:
        chunks.append(tuple(order[cursor : cursor + increment]))
        cursor += increment

    tasks = tuple(
        TaskSplit(
            task_index=i,
            class_ids=chunk,
            train_rows=_rows_for(train.labels, chunk),
            test_rows=_rows_for(test.labels, chunk),
        )
        for i, chunk in enumerate(chunks)
    )
    return Scenario(
        class_order=tuple(order),
        base_size=base_size,
        increment=increment,
        num_classes=num_classes,
        tasks=tasks,
    )
