"""Request/response bodies for the HTTP service.

These mirror the TOML layout one-to-one; ``to_raw`` rebuilds the nested
dict so the core config parser stays the single validator. Pydantic only
guards JSON shape and types here.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ClipSpec(BaseModel):
    mode: Literal["none", "global-l2-norm", "element-clamp"]
    threshold: Optional[float] = None

    def to_raw(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.threshold is not None:
            out["threshold"] = self.threshold
        return out


class TrainSpec(BaseModel):
    lr: float = 0.01
    epochs_per_task: int = 10
    batch_size: int = 16
    momentum: float = 0.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    clip_new: Optional[ClipSpec] = None
    clip_memory: Optional[ClipSpec] = None
    importance_mode: str = "average"
    replay: Optional[bool] = None
    update_rule: str = "alternating"

    def to_raw(self) -> dict:
        out: dict = {
            "lr": self.lr,
            "epochs_per_task": self.epochs_per_task,
            "batch_size": self.batch_size,
            "momentum": self.momentum,
            "importance_mode": self.importance_mode,
            "update_rule": self.update_rule,
        }
        for key in ("alpha", "beta", "replay"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.clip_new is not None:
            out["clip_new"] = self.clip_new.to_raw()
        if self.clip_memory is not None:
            out["clip_memory"] = self.clip_memory.to_raw()
        return out


class DatasetSpec(BaseModel):
    kind: Literal["mnist", "features"] = "mnist"
    dir: Optional[str] = None
    train: Optional[str] = None
    test: Optional[str] = None

    def to_raw(self) -> dict:
        out: dict = {"kind": self.kind}
        for key in ("dir", "train", "test"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


class ScenarioSpec(BaseModel):
    base_size: int = 2
    increment: int = 2
    class_order_seed: Optional[int] = None

    def to_raw(self) -> dict:
        out: dict = {"base_size": self.base_size, "increment": self.increment}
        if self.class_order_seed is not None:
            out["class_order_seed"] = self.class_order_seed
        return out


class ModelSpec(BaseModel):
    hidden_layers: int = 1
    hidden_width: int = 32

    def to_raw(self) -> dict:
        return {"hidden_layers": self.hidden_layers, "hidden_width": self.hidden_width}


class RunRequest(BaseModel):
    method: Literal["wbr", "finetune", "simplecil"] = "wbr"
    seeds: list[int] = Field(default_factory=lambda: [0])
    output_dir: str
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    scenario: ScenarioSpec = Field(default_factory=ScenarioSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainSpec = Field(default_factory=TrainSpec)

    def to_raw(self) -> dict:
        return {
            "experiment": {
                "method": self.method,
                "seeds": self.seeds,
                "output_dir": self.output_dir,
            },
            "dataset": self.dataset.to_raw(),
            "scenario": self.scenario.to_raw(),
            "model": self.model.to_raw(),
            "train": self.train.to_raw(),
        }


class GridRequest(RunRequest):
    axes: dict[str, list] = Field(default_factory=dict)
    jobs: int = 1


class ReportRequest(BaseModel):
    runs: list[str]
    output: str
    baseline: Optional[str] = None


class FootprintRequest(BaseModel):
    store: str
    shape: str = "32x32x3"


class JobSubmitted(BaseModel):
    job_id: str
    kind: str
    status_url: str


class JobStatus(BaseModel):
    job_id: str
    kind: str
    state: Literal["queued", "running", "done", "error"]
    error: Optional[str] = None
