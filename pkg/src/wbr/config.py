"""Experiment configuration: a TOML file plus dotted-path overrides.

Example file::

    [experiment]
    method = "wbr"              # wbr | finetune | simplecil
    seeds = [0, 1, 2]
    output_dir = "runs/inc2"

    [dataset]
    kind = "mnist"              # mnist | features
    dir = "data/mnist"          # optional; falls back to $WBR_DATA_DIR

    [scenario]
    base_size = 2
    increment = 2

    [model]
    hidden_layers = 1
    hidden_width = 32

    [train]
    lr = 0.01
    epochs_per_task = 10
    batch_size = 16
    alpha = 0.5                 # new-task clip threshold (global L2 norm)
    # beta intentionally unset: memory steps run unclipped

``alpha``/``beta`` are shorthand for the common global-norm clip; the
explicit tables ``[train.clip_new]`` / ``[train.clip_memory]`` select other
modes and conflict with the shorthand. Any value can be overridden from the
command line with ``--set train.lr=0.1`` (values are parsed as TOML).
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .optim import CLIP_MODES, ClipPolicy
from .trainer import UPDATE_RULES, TrainConfig

METHODS = ("wbr", "finetune", "simplecil")

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def parse_override_value(text: str):
    """Interpret the right-hand side of ``--set key=value`` as TOML."""
    try:
        doc = tomllib.loads(f"v = {text}")
        return doc["v"]
    except tomllib.TOMLDecodeError:
        return text  # bare strings stay strings


def apply_overrides(raw: dict, assignments: Sequence[str]) -> dict:
    """Apply ``section.key=value`` assignments onto a parsed TOML dict."""
    out = copy.deepcopy(raw)
    for item in assignments:
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        dotted, _, value = item.partition("=")
        dotted = dotted.strip()
        if not dotted:
            raise ConfigError("--set", f"empty key in {item!r}")
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(dotted, f"{part} is not a table")
            node = nxt
        node[parts[-1]] = parse_override_value(value.strip())
    return out


def _require(section: dict, key: str, kinds, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key}", "missing required key")
    value = section[key]
    kinds_t = kinds if isinstance(kinds, tuple) else (kinds,)
    # bool subclasses int; reject it unless bool was asked for explicitly
    if isinstance(value, bool) and bool not in kinds_t:
        raise ConfigError(f"{where}.{key}", f"wrong type {type(value).__name__}")
    if not isinstance(value, kinds_t):
        raise ConfigError(f"{where}.{key}", f"wrong type {type(value).__name__}")
    return value


def _optional(section: dict, key: str, default, kinds, where: str):
    if key not in section:
        return default
    return _require(section, key, kinds, where)


@dataclass
class DatasetConfig:
    kind: str
    directory: Optional[str] = None
    train_path: Optional[str] = None
    test_path: Optional[str] = None

    def resolve_dir(self) -> Path:
        """Directory holding the four idx files; env fallback at call time."""
        directory = self.directory or os.environ.get("WBR_DATA_DIR")
        if not directory:
            raise ConfigError(
                "dataset.dir", "not set and WBR_DATA_DIR is empty; cannot locate idx files"
            )
        return Path(directory)


@dataclass
class ExperimentConfig:
    method: str
    seeds: list[int]
    output_dir: str
    dataset: DatasetConfig
    base_size: int
    increment: int
    class_order_seed: Optional[int]
    hidden_layers: int
    hidden_width: int
    train: dict = field(default_factory=dict)  # TrainConfig kwargs minus seed
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_toml(cls, path: Union[str, Path], overrides: Sequence[str] = ()) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"no such file: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"invalid TOML: {exc}")
        return cls.from_dict(apply_overrides(raw, overrides))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        exp = raw.get("experiment", {})
        method = _optional(exp, "method", "wbr", str, "experiment")
        if method not in METHODS:
            raise ConfigError("experiment.method", f"expected one of {METHODS}, got {method!r}")
        seeds = _optional(exp, "seeds", [0], list, "experiment")
        if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigError("experiment.seeds", f"must be a non-empty list of ints, got {seeds!r}")
        output_dir = _optional(exp, "output_dir", "runs/out", str, "experiment")

        ds = raw.get("dataset", {})
        kind = _optional(ds, "kind", "mnist", str, "dataset")
        if kind not in ("mnist", "features"):
            raise ConfigError("dataset.kind", f"expected mnist or features, got {kind!r}")
        dataset = DatasetConfig(kind=kind)
        if kind == "mnist":
            dataset.directory = _optional(ds, "dir", None, str, "dataset")
        else:
            dataset.train_path = _require(ds, "train", str, "dataset")
            dataset.test_path = _require(ds, "test", str, "dataset")

        sc = raw.get("scenario", {})
        base_size = _optional(sc, "base_size", 2, int, "scenario")
        increment = _optional(sc, "increment", 2, int, "scenario")
        class_order_seed = _optional(sc, "class_order_seed", None, int, "scenario")

        mo = raw.get("model", {})
        hidden_layers = _optional(mo, "hidden_layers", 1, int, "model")
        hidden_width = _optional(mo, "hidden_width", 32, int, "model")
        if hidden_layers < 0:
            raise ConfigError("model.hidden_layers", f"must be >= 0, got {hidden_layers}")
        if hidden_width < 1:
            raise ConfigError("model.hidden_width", f"must be >= 1, got {hidden_width}")

        train = _parse_train(raw.get("train", {}), method)

        return cls(
            method=method,
            seeds=[int(s) for s in seeds],
            output_dir=output_dir,
            dataset=dataset,
            base_size=base_size,
            increment=increment,
            class_order_seed=class_order_seed,
            hidden_layers=hidden_layers,
            hidden_width=hidden_width,
            train=train,
            raw=raw,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(seed=seed, **self.train)

    def layer_dims(self, input_dim: int, num_classes: int) -> list[int]:
        return [input_dim] + [self.hidden_width] * self.hidden_layers + [num_classes]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _parse_clip(table: dict, where: str) -> ClipPolicy:
    mode = _require(table, "mode", str, where)
    if mode not in CLIP_MODES:
        raise ConfigError(f"{where}.mode", f"expected one of {CLIP_MODES}, got {mode!r}")
    threshold = _optional(table, "threshold", None, (int, float), where)
    try:
        return ClipPolicy(mode=mode, threshold=None if threshold is None else float(threshold))
    except ConfigError as exc:
        raise ConfigError(where, exc.message)


def _parse_train(section: dict, method: str) -> dict:
    out: dict = {}
    out["lr"] = float(_optional(section, "lr", 0.01, (int, float), "train"))
    out["epochs_per_task"] = _optional(section, "epochs_per_task", 10, int, "train")
    out["batch_size"] = _optional(section, "batch_size", 16, int, "train")
    out["momentum"] = float(_optional(section, "momentum", 0.0, (int, float), "train"))
    out["importance_mode"] = _optional(section, "importance_mode", "average", str, "train")
    update_rule = _optional(section, "update_rule", "alternating", str, "train")
    if update_rule not in UPDATE_RULES:
        raise ConfigError("train.update_rule", f"expected one of {UPDATE_RULES}, got {update_rule!r}")
    out["update_rule"] = update_rule

    replay = _optional(section, "replay", method != "finetune", bool, "train")
    if method == "finetune" and replay:
        raise ConfigError("train.replay", "finetune must not replay; drop the key or set false")
    out["replay_enabled"] = replay

    alpha = _optional(section, "alpha", None, (int, float), "train")
    beta = _optional(section, "beta", None, (int, float), "train")
    if "clip_new" in section:
        if alpha is not None:
            raise ConfigError("train.clip_new", "conflicts with train.alpha; set only one")
        out["clip_new"] = _parse_clip(section["clip_new"], "train.clip_new")
    elif alpha is not None:
        out["clip_new"] = ClipPolicy.global_norm(float(alpha))
    if "clip_memory" in section:
        if beta is not None:
            raise ConfigError("train.clip_memory", "conflicts with train.beta; set only one")
        out["clip_memory"] = _parse_clip(section["clip_memory"], "train.clip_memory")
    elif beta is not None:
        out["clip_memory"] = ClipPolicy.global_norm(float(beta))

    TrainConfig(seed=0, **out)  # surface range errors at parse time, not mid-run
    return out
