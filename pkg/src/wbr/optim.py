"""SGD with optional momentum, plus the gradient clip policies.

Two clip modes are offered for the per-step magnitude constraints applied to
new-task and replay gradients. ``global-l2-norm`` (the default used by the
replay trainer) rescales the joint gradient of all parameters to at most the
threshold, preserving direction. ``element-clamp`` bounds every entry to
[-threshold, +threshold] independently. Clipping always treats the model's
weights and biases as one parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .model import Gradients, MlpModel

CLIP_MODES = ("none", "global-l2-norm", "element-clamp")


@dataclass(frozen=True)
class ClipPolicy:
    mode: str = "none"
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.mode not in CLIP_MODES:
            raise ConfigError("clip.mode", f"unknown mode {self.mode!r}, expected one of {CLIP_MODES}")
        if self.mode == "none":
            if self.threshold is not None:
                raise ConfigError("clip.threshold", "must be absent when mode is 'none'")
        else:
            if self.threshold is None or not self.threshold > 0:
                raise ConfigError("clip.threshold", f"must be > 0, got {self.threshold}")

    @classmethod
    def none(cls) -> "ClipPolicy":
        return cls(mode="none")

    @classmethod
    def global_norm(cls, threshold: float) -> "ClipPolicy":
        return cls(mode="global-l2-norm", threshold=threshold)

    @classmethod
    def clamp(cls, threshold: float) -> "ClipPolicy":
        return cls(mode="element-clamp", threshold=threshold)

    def describe(self) -> str:
        return "not set" if self.mode == "none" else f"{self.mode}({self.threshold:g})"


def joint_norm(grads: Gradients) -> float:
    """L2 norm over all weight and bias gradients jointly."""
    total = 0.0
    for tensor in grads.tensors():
        total += float(np.dot(tensor.ravel(), tensor.ravel()))
    return float(np.sqrt(total))


def clip(grads: Gradients, policy: ClipPolicy) -> Gradients:
    """Apply ``policy`` and return a new Gradients; the input is untouched."""
    for tensor in grads.tensors():
        if not np.all(np.isfinite(tensor)):
            raise NumericError("cannot clip non-finite gradients")
    if policy.mode == "none":
        return grads.copy()
    if policy.mode == "global-l2-norm":
        norm = joint_norm(grads)
        scale = 1.0 if norm <= policy.threshold else policy.threshold / norm
        out = grads.copy()
        if scale < 1.0:
            for tensor in out.tensors():
                tensor *= scale
        return out
    # element-clamp
    return Gradients(
        d_weights=[np.clip(g, -policy.threshold, policy.threshold) for g in grads.d_weights],
        d_biases=[np.clip(g, -policy.threshold, policy.threshold) for g in grads.d_biases],
    )


@dataclass
class SgdState:
    """Optimizer state; velocity buffers exist only when momentum is active.

    One state is shared by new-task and replay steps, so momentum carries
    across the two step types exactly as a single optimizer would.
    """

    lr: float
    momentum: float = 0.0
    velocity: Optional[Gradients] = None

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError("train.lr", f"must be > 0, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("train.momentum", f"must be in [0, 1), got {self.momentum}")


def sgd_step(model: MlpModel, grads: Gradients, state: SgdState) -> None:
    """In-place parameter update: plain SGD, or heavy-ball when momentum > 0.

    momentum = 0:  w <- w - lr * g
    momentum > 0:  v <- m * v + g;  w <- w - lr * v
    """
    if len(grads.d_weights) != len(model.weights):
        raise ShapeError(
            f"gradients cover {len(grads.d_weights)} layers, model has {len(model.weights)}"
        )
    for w, g in zip(model.weights, grads.d_weights):
        if w.shape != g.shape:
            raise ShapeError(f"weight shape {w.shape} != gradient shape {g.shape}")

    if state.momentum > 0.0:
        if state.velocity is None:
            state.velocity = Gradients.zeros_like(model)
        for v, g in zip(state.velocity.tensors(), grads.tensors()):
            v *= state.momentum
            v += g
        update = state.velocity
    else:
        update = grads

    for w, u in zip(model.weights, update.d_weights):
        w -= state.lr * u
    for b, u in zip(model.biases, update.d_biases):
        b -= state.lr * u
