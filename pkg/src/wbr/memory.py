"""Per-class replay memory: one aggregated vector per completed class.

After a task finishes training, each of its classes is compressed into a
single vector in model-input space (raw pixels for MLP runs, encoder features
for the pretrained pathway). Two aggregation rules are supported: the plain
per-class mean, and a confidence-weighted mean where low-confidence samples
(1 - p_true under the just-trained model) carry more weight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .data import LabeledDataset, load_feature_file, write_feature_file
from .errors import EstimationError, FormatError, ProtocolError
from .model import MlpModel, forward, true_class_probabilities

log = logging.getLogger(__name__)

IMPORTANCE_MODES = ("average", "confidence")


@dataclass
class MemoryVector:
    class_id: int
    vector: np.ndarray       # (dim,)
    source_task: int


@dataclass
class MemoryStore:
    """At most one memory vector per class, appended task by task."""

    importance_mode: str = "average"
    vectors: list[MemoryVector] = field(default_factory=list)

    def __post_init__(self):
        if self.importance_mode not in IMPORTANCE_MODES:
            raise ProtocolError(f"unknown importance mode {self.importance_mode!r}")

    def __len__(self) -> int:
        return len(self.vectors)

    def class_ids(self) -> set[int]:
        return {v.class_id for v in self.vectors}

    def append(self, vectors: Iterable[MemoryVector]) -> None:
        for vec in vectors:
            if vec.class_id in self.class_ids():
                raise ProtocolError(f"class {vec.class_id} already has a memory vector")
            self.vectors.append(vec)

    def replay_batch(self) -> tuple[np.ndarray, np.ndarray]:
        """All stored vectors as one batch, sorted by class id.

        Empty store yields (0, 0)-shaped features; the trainer skips the
        replay step in that case.
        """
        if not self.vectors:
            return np.zeros((0, 0), dtype=np.float64), np.zeros(0, dtype=np.int64)
        ordered = sorted(self.vectors, key=lambda v: v.class_id)
        features = np.stack([v.vector for v in ordered]).astype(np.float64)
        labels = np.asarray([v.class_id for v in ordered], dtype=np.int64)
        return features, labels


def build_memory_average(
    task_data: LabeledDataset,
    class_ids: Iterable[int],
    source_task: int = -1,
) -> list[MemoryVector]:
    """Mean input vector per class: a_* = (1/N) sum a_i."""
    out = []
    for cid in class_ids:
        rows = task_data.features[task_data.labels == cid]
        if rows.shape[0] == 0:
            raise EstimationError(f"class {cid} has no samples to aggregate")
        out.append(MemoryVector(class_id=int(cid), vector=rows.mean(axis=0), source_task=source_task))
    return out


def build_memory_confidence(
    task_data: LabeledDataset,
    class_ids: Iterable[int],
    model: MlpModel,
    class_mask: Optional[Iterable[int]] = None,
    source_task: int = -1,
) -> list[MemoryVector]:
    """Confidence-weighted aggregation: weight_i proportional to 1 - p_true(x_i).

    Weights are normalized to sum to 1 per class so the vector stays on the
    input scale. If every sample is classified with certainty (all weights
    zero) the class falls back to the plain average, with a logged notice.
    """
    out = []
    for cid in class_ids:
        rows = task_data.features[task_data.labels == cid]
        if rows.shape[0] == 0:
            raise EstimationError(f"class {cid} has no samples to aggregate")
        labels = np.full(rows.shape[0], cid, dtype=np.int64)
        logits, _ = forward(model, rows, class_mask)
        weights = 1.0 - true_class_probabilities(logits, labels, class_mask)
        total = float(weights.sum())
        if total == 0.0:
            log.warning("class %d: all samples at confidence 1, falling back to average", cid)
            vector = rows.mean(axis=0)
        else:
            vector = (weights / total) @ rows
        out.append(MemoryVector(class_id=int(cid), vector=vector, source_task=source_task))
    return out


def memory_footprint_in_samples(store: MemoryStore, sample_dims: tuple[int, int, int]) -> float:
    """Stored floats expressed in units of one raw sample (h*w*c values)."""
    h, w, c = sample_dims
    if h <= 0 or w <= 0 or c <= 0:
        raise ValueError(f"sample dims must be positive, got {sample_dims}")
    if not store.vectors:
        return 0.0
    dim = store.vectors[0].vector.shape[0]
    return (len(store.vectors) * dim) / float(h * w * c)


def save_store(store: MemoryStore, path: Union[str, Path]) -> None:
    """Checkpoint the store as a WBRF file plus a JSON sidecar.

    Vectors become feature rows and class ids the labels; the sidecar keeps
    what the binary format cannot (importance mode, source tasks).
    """
    features, labels = store.replay_batch()
    if len(store) == 0:
        raise ProtocolError("refusing to checkpoint an empty memory store")
    num_classes = int(labels.max()) + 1
    dataset = LabeledDataset(features=features, labels=labels, num_classes=num_classes)
    ordered = sorted(store.vectors, key=lambda v: v.class_id)
    sidecar = {
        "kind": "wbr-memory-store",
        "importance_mode": store.importance_mode,
        "source_tasks": {str(v.class_id): v.source_task for v in ordered},
    }
    write_feature_file(path, dataset, sidecar=sidecar)


def load_store(path: Union[str, Path]) -> MemoryStore:
    """Restore a store checkpointed by :func:`save_store`."""
    dataset = load_feature_file(path)
    sidecar_path = Path(str(path) + ".json")
    importance_mode = "average"
    source_tasks: dict = {}
    if sidecar_path.exists():
        import json

        meta = json.loads(sidecar_path.read_text())
        importance_mode = meta.get("importance_mode", "average")
        source_tasks = meta.get("source_tasks", {})
    labels = dataset.labels
    if len(set(labels.tolist())) != len(labels):
        raise FormatError(f"{path}: duplicate class ids in memory checkpoint")
    store = MemoryStore(importance_mode=importance_mode)
    store.append(
        MemoryVector(
            class_id=int(cid),
            vector=dataset.features[i],
            source_task=int(source_tasks.get(str(int(cid)), -1)),
        )
        for i, cid in enumerate(labels)
    )
    return store
