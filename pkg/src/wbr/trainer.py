"""Training loops: the balanced-replay method plus finetune and prototype
baselines.

One incremental stage trains on the current task's data in shuffled
mini-batches. Every batch triggers up to two separate gradient steps:

  1. forward/backward on the batch, clipped by the new-task policy, update;
  2. if any memory vectors exist, forward/backward on the whole replay batch,
     clipped by the memory policy, update.

Both losses are masked softmax cross-entropy over the classes seen so far.
After the stage's epochs finish, each new class is compressed into a single
memory vector and appended to the store, and the model is evaluated on the
test rows of all seen classes.

An alternative single-step rule ("joint") sums the two clipped gradients and
applies one update; it exists for comparison and is off by default.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, ProtocolError, ShapeError
from .linalg import SeededRng, rng_shuffle
from .memory import (
    MemoryStore,
    build_memory_average,
    build_memory_confidence,
)
from .metrics import StageRecord, accuracy, average_accuracy
from .model import (
    MlpModel,
    PrototypeClassifier,
    backward,
    class_centers,
    cosine_classify,
    forward,
    softmax_ce,
)
from .optim import ClipPolicy, SgdState, clip, sgd_step
from .scenario import Scenario, TaskSplit

Observer = Callable[[str, dict], None]

UPDATE_RULES = ("alternating", "joint")


@dataclass
class TrainConfig:
    """Hyperparameters of one incremental run."""

    lr: float = 0.01
    epochs_per_task: int = 10
    batch_size: int = 16
    momentum: float = 0.0
    clip_new: ClipPolicy = field(default_factory=ClipPolicy.none)
    clip_memory: ClipPolicy = field(default_factory=ClipPolicy.none)
    importance_mode: str = "average"
    seed: int = 0
    replay_enabled: bool = True
    update_rule: str = "alternating"

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError("train.lr", f"must be > 0, got {self.lr}")
        if self.epochs_per_task < 1:
            raise ConfigError("train.epochs_per_task", f"must be >= 1, got {self.epochs_per_task}")
        if self.batch_size < 1:
            raise ConfigError("train.batch_size", f"must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("train.momentum", f"must be in [0, 1), got {self.momentum}")
        if self.importance_mode not in ("average", "confidence"):
            raise ConfigError("train.importance_mode", f"unknown mode {self.importance_mode!r}")
        if self.update_rule not in UPDATE_RULES:
            raise ConfigError("train.update_rule", f"expected one of {UPDATE_RULES}")

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "epochs_per_task": self.epochs_per_task,
            "batch_size": self.batch_size,
            "momentum": self.momentum,
            "clip_new": {"mode": self.clip_new.mode, "threshold": self.clip_new.threshold},
            "clip_memory": {"mode": self.clip_memory.mode, "threshold": self.clip_memory.threshold},
            "importance_mode": self.importance_mode,
            "seed": self.seed,
            "replay_enabled": self.replay_enabled,
            "update_rule": self.update_rule,
        }


@dataclass
class RunRecord:
    """Everything one run produces: config echo, per-stage metrics, summary."""

    method: str
    seed: int
    config: dict
    scenario: dict
    stages: list[StageRecord]
    model_summary: dict
    memory_summary: dict

    @property
    def final_accuracy(self) -> float:
        return self.stages[-1].a_b

    @property
    def mean_accuracy(self) -> float:
        return average_accuracy([s.a_b for s in self.stages])

    def metrics_payload(self) -> dict:
        """Deterministic metrics only; excludes wall-clock timing."""
        return {
            "method": self.method,
            "seed": self.seed,
            "final_a_b": self.final_accuracy,
            "average_accuracy": self.mean_accuracy,
            "stages": [s.metrics_dict() for s in self.stages],
        }

    def fingerprint(self) -> str:
        """Canonical JSON of the metrics; byte-equal across identical runs."""
        return json.dumps(self.metrics_payload(), sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "scenario": self.scenario,
            "model": self.model_summary,
            "memory": self.memory_summary,
            "final_a_b": self.final_accuracy,
            "average_accuracy": self.mean_accuracy,
            "stages": [
                {**s.metrics_dict(), "wall_ms": s.wall_ms} for s in self.stages
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        stages = [
            StageRecord(
                stage=s["stage"],
                task_classes=list(s["task_classes"]),
                seen_classes=s["seen_classes"],
                a_b=s["a_b"],
                new_task_accuracy=s["new_task_accuracy"],
                per_task_accuracy=list(s["per_task_accuracy"]),
                wall_ms=s.get("wall_ms", 0.0),
            )
            for s in payload["stages"]
        ]
        return cls(
            method=payload["method"],
            seed=payload["seed"],
            config=payload.get("config", {}),
            scenario=payload.get("scenario", {}),
            stages=stages,
            model_summary=payload.get("model", {}),
            memory_summary=payload.get("memory", {}),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _predict(model: MlpModel, batch: np.ndarray, mask: np.ndarray) -> np.ndarray:
    logits, _ = forward(model, batch)
    return mask[np.argmax(logits[:, mask], axis=1)]


def wbr_train_task(
    model: MlpModel,
    train: LabeledDataset,
    task: TaskSplit,
    seen_class_ids: Sequence[int],
    store: MemoryStore,
    cfg: TrainConfig,
    state: SgdState,
    rng: SeededRng,
    observer: Optional[Observer] = None,
) -> None:
    """Run one task's epochs of (new-task step, replay step) pairs.

    Raw rows of earlier tasks never enter this loop; the only rehearsal
    signal is the store's per-class vectors. A store that already holds a
    current-task class indicates protocol leakage and is rejected.
    """
    overlap = store.class_ids() & set(task.class_ids)
    if overlap:
        raise ProtocolError(f"memory store already holds current-task classes {sorted(overlap)}")

    mask = np.asarray(sorted(seen_class_ids), dtype=np.int64)
    task_x = train.features[task.train_rows]
    task_y = train.labels[task.train_rows]
    n = task_x.shape[0]
    if n == 0:
        raise ProtocolError(f"task {task.task_index} has no training rows")

    use_memory = cfg.replay_enabled and len(store) > 0
    if use_memory:
        mem_x, mem_y = store.replay_batch()

    for epoch in range(cfg.epochs_per_task):
        perm = rng_shuffle(rng, n)
        for start in range(0, n, cfg.batch_size):
            rows = perm[start : start + cfg.batch_size]
            batch_x = task_x[rows]
            batch_y = task_y[rows]

            logits, cache = forward(model, batch_x, mask)
            _, d_logits = softmax_ce(logits, batch_y, mask)
            grads_new = backward(model, cache, d_logits)

            def memory_grads():
                m_logits, m_cache = forward(model, mem_x, mask)
                _, m_d_logits = softmax_ce(m_logits, mem_y, mask)
                return backward(model, m_cache, m_d_logits)

            if cfg.update_rule == "alternating":
                # two genuine steps: the replay gradient is taken at the
                # weights the new-task step just produced
                sgd_step(model, clip(grads_new, cfg.clip_new), state)
                if use_memory:
                    sgd_step(model, clip(memory_grads(), cfg.clip_memory), state)
            else:  # joint: both gradients at the same weights, one update
                combined = clip(grads_new, cfg.clip_new)
                if use_memory:
                    combined.add_scaled(clip(memory_grads(), cfg.clip_memory))
                sgd_step(model, combined, state)

            if observer is not None:
                observer("step", {
                    "task": task.task_index,
                    "epoch": epoch,
                    "row_ids": task.train_rows[rows],
                    "replayed_classes": mem_y.tolist() if use_memory else [],
                })


def _evaluate_stage(
    predict: Callable[[np.ndarray], np.ndarray],
    test: LabeledDataset,
    scenario: Scenario,
    stage: int,
) -> tuple[float, float, list[float]]:
    """A_b over all seen test rows, new-task accuracy, per-task breakdown."""
    per_task = []
    correct_rows = []
    for t in range(stage + 1):
        rows = scenario.tasks[t].test_rows
        x, y = test.rows(rows)
        preds = predict(x)
        per_task.append(accuracy(preds, y))
        correct_rows.append((preds == y))
    all_correct = np.concatenate(correct_rows)
    a_b = 100.0 * float(all_correct.mean())
    return a_b, per_task[stage], per_task


def run_continual(
    model: MlpModel,
    scenario: Scenario,
    train: LabeledDataset,
    test: LabeledDataset,
    cfg: TrainConfig,
    rng: Optional[SeededRng] = None,
    observer: Optional[Observer] = None,
    method: str = "wbr",
    config_echo: Optional[dict] = None,
) -> RunRecord:
    """Full incremental run: train, memorize, and evaluate per task."""
    if model.output_dim < scenario.num_classes:
        raise ShapeError(
            f"model has {model.output_dim} outputs, scenario schedules {scenario.num_classes} classes"
        )
    rng = rng if rng is not None else SeededRng(cfg.seed)
    state = SgdState(lr=cfg.lr, momentum=cfg.momentum)
    store = MemoryStore(importance_mode=cfg.importance_mode)
    stages: list[StageRecord] = []

    for b, task in enumerate(scenario.tasks):
        started = time.perf_counter()
        seen = sorted(scenario.seen_classes(b))
        mask = np.asarray(seen, dtype=np.int64)

        wbr_train_task(model, train, task, seen, store, cfg, state, rng, observer)

        if cfg.replay_enabled:
            task_data = LabeledDataset(
                features=train.features[task.train_rows],
                labels=train.labels[task.train_rows],
                num_classes=train.num_classes,
            )
            if cfg.importance_mode == "confidence":
                vectors = build_memory_confidence(
                    task_data, task.class_ids, model, class_mask=seen, source_task=b
                )
            else:
                vectors = build_memory_average(task_data, task.class_ids, source_task=b)
            store.append(vectors)

        a_b, new_acc, per_task = _evaluate_stage(
            lambda x: _predict(model, x, mask), test, scenario, b
        )
        stages.append(StageRecord(
            stage=b,
            task_classes=[int(c) for c in task.class_ids],
            seen_classes=len(seen),
            a_b=a_b,
            new_task_accuracy=new_acc,
            per_task_accuracy=per_task,
            wall_ms=1000.0 * (time.perf_counter() - started),
        ))

    return RunRecord(
        method=method,
        seed=cfg.seed,
        config=config_echo if config_echo is not None else cfg.to_dict(),
        scenario=scenario.fingerprint(),
        stages=stages,
        model_summary={"layer_dims": list(model.layer_dims), "param_count": model.param_count()},
        memory_summary={"num_vectors": len(store), "importance_mode": cfg.importance_mode},
    )


def simplecil_run(
    scenario: Scenario,
    train: LabeledDataset,
    test: LabeledDataset,
    config_echo: Optional[dict] = None,
) -> RunRecord:
    """Training-free baseline: accumulate per-class centers, classify by cosine.

    Works on any feature space (frozen-encoder embeddings, or raw inputs for
    ablation); no parameter receives a gradient at any point.
    """
    centers: list[np.ndarray] = []
    class_ids: list[int] = []
    stages: list[StageRecord] = []

    for b, task in enumerate(scenario.tasks):
        started = time.perf_counter()
        x, y = train.rows(task.train_rows)
        proto_new = class_centers(x, y, task.class_ids)
        centers.extend(proto_new.centers)
        class_ids.extend(proto_new.class_ids)
        proto = PrototypeClassifier(centers=np.stack(centers), class_ids=tuple(class_ids))

        a_b, new_acc, per_task = _evaluate_stage(
            lambda feats: cosine_classify(proto, feats), test, scenario, b
        )
        stages.append(StageRecord(
            stage=b,
            task_classes=[int(c) for c in task.class_ids],
            seen_classes=len(class_ids),
            a_b=a_b,
            new_task_accuracy=new_acc,
            per_task_accuracy=per_task,
            wall_ms=1000.0 * (time.perf_counter() - started),
        ))

    return RunRecord(
        method="simplecil",
        seed=0,
        config=config_echo if config_echo is not None else {},
        scenario=scenario.fingerprint(),
        stages=stages,
        model_summary={"prototype_classes": len(class_ids), "dim": train.dim},
        memory_summary={"num_vectors": 0, "importance_mode": "none"},
    )


@dataclass
class WeightDeltaProbe:
    """Parameter movement between two snapshots of the same architecture.

    ``layer_delta_norms`` covers each layer's weights and bias jointly;
    ``output_row_norms`` is the per-output-unit delta of the final layer
    (weight column plus bias entry), indexed by class id.
    """

    layer_delta_norms: list[float]
    output_row_norms: np.ndarray

    def class_delta_ratio(self, new_classes: Sequence[int], old_classes: Sequence[int]) -> float:
        """Mean final-layer delta of new classes over that of old classes."""
        new_mean = float(np.mean(self.output_row_norms[list(new_classes)]))
        old_mean = float(np.mean(self.output_row_norms[list(old_classes)]))
        if old_mean == 0.0:
            raise ZeroDivisionError("old-class rows did not move; ratio undefined")
        return new_mean / old_mean


def weight_delta_probe(model_before: MlpModel, model_after: MlpModel) -> WeightDeltaProbe:
    """L2 norms of parameter changes, per layer and per final-layer class row."""
    if model_before.layer_dims != model_after.layer_dims:
        raise ShapeError(
            f"architectures differ: {model_before.layer_dims} vs {model_after.layer_dims}"
        )
    layer_norms = []
    for wb, wa, bb, ba in zip(
        model_before.weights, model_after.weights, model_before.biases, model_after.biases
    ):
        dw = wa - wb
        db = ba - bb
        layer_norms.append(float(np.sqrt(np.sum(dw * dw) + np.sum(db * db))))

    dw_last = model_after.weights[-1] - model_before.weights[-1]
    db_last = model_after.biases[-1] - model_before.biases[-1]
    row_norms = np.sqrt(np.sum(dw_last * dw_last, axis=0) + db_last * db_last)
    return WeightDeltaProbe(layer_delta_norms=layer_norms, output_row_norms=row_norms)
