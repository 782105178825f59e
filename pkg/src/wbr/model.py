"""MLP decoder with manual backprop, masked cross-entropy, and the
prototype/cosine classifier.

The network is input -> (hidden x N, ReLU) -> linear output. Weights are
(fan_in, fan_out) matrices so a batch flows as ``x @ W + b``. The softmax and
its loss are always restricted to an explicit set of "seen" class ids; logits
outside the mask receive exactly zero probability and zero gradient, which is
what keeps early incremental stages well-defined when most output units have
never seen data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EstimationError, ProtocolError, ShapeError
from .linalg import DenseMatrix, SeededRng


class MlpModel:
    """Fully-connected network with ReLU hidden activations.

    ``layer_dims`` is (input_dim, hidden..., output_dim); zero hidden layers
    gives a plain linear classifier. Weights use Glorot-uniform init drawn
    from the package PRNG, biases start at zero and are trained.
    """

    def __init__(self, layer_dims: Sequence[int], rng: SeededRng):
        if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
            raise ShapeError(f"layer_dims must chain >=2 positive sizes, got {layer_dims}")
        self.layer_dims = [int(d) for d in layer_dims]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "MlpModel":
        dup = object.__new__(MlpModel)
        dup.layer_dims = list(self.layer_dims)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup


@dataclass
class Gradients:
    """Per-layer gradient mirror of an :class:`MlpModel`."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "Gradients":
        return cls(
            d_weights=[np.zeros_like(w) for w in model.weights],
            d_biases=[np.zeros_like(b) for b in model.biases],
        )

    def copy(self) -> "Gradients":
        return Gradients(
            d_weights=[g.copy() for g in self.d_weights],
            d_biases=[g.copy() for g in self.d_biases],
        )

    def tensors(self) -> list[np.ndarray]:
        return self.d_weights + self.d_biases

    def add_scaled(self, other: "Gradients", factor: float = 1.0) -> None:
        for mine, theirs in zip(self.d_weights, other.d_weights):
            mine += factor * theirs
        for mine, theirs in zip(self.d_biases, other.d_biases):
            mine += factor * theirs


@dataclass
class ForwardCache:
    """Activations saved by :func:`forward` for the matching backward pass."""

    activations: list[np.ndarray]       # activations[0] is the input batch
    pre_activations: list[np.ndarray]   # one per hidden layer
    class_mask: Optional[np.ndarray]


def _mask_array(class_mask: Optional[Iterable[int]], output_dim: int) -> np.ndarray:
    if class_mask is None:
        return np.arange(output_dim, dtype=np.int64)
    ids = np.unique(np.asarray(sorted(class_mask), dtype=np.int64))
    if len(ids) == 0:
        raise ProtocolError("class mask is empty")
    if ids[0] < 0 or ids[-1] >= output_dim:
        raise ProtocolError(f"class mask {ids.tolist()} outside output range 0..{output_dim - 1}")
    return ids


def forward(
    model: MlpModel,
    batch: DenseMatrix,
    class_mask: Optional[Iterable[int]] = None,
) -> tuple[DenseMatrix, ForwardCache]:
    """Run the network on ``batch``; returns full-width logits plus cache.

    The mask does not alter the logits (all output units are computed); it is
    recorded for the loss/backward stage.
    """
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ShapeError(f"batch shape {batch.shape} incompatible with input dim {model.input_dim}")
    mask = _mask_array(class_mask, model.output_dim) if class_mask is not None else None
    activations = [np.ascontiguousarray(batch, dtype=np.float64)]
    pre_activations: list[np.ndarray] = []
    h = activations[0]
    for layer in range(model.num_layers - 1):
        z = h @ model.weights[layer] + model.biases[layer]
        pre_activations.append(z)
        h = np.maximum(z, 0.0)
        activations.append(h)
    logits = h @ model.weights[-1] + model.biases[-1]
    return logits, ForwardCache(activations, pre_activations, mask)


def masked_softmax(logits: DenseMatrix, class_mask: Optional[Iterable[int]]) -> DenseMatrix:
    """Softmax over the masked class set only; zero outside the mask."""
    mask = _mask_array(class_mask, logits.shape[1])
    sub = logits[:, mask]
    sub = sub - sub.max(axis=1, keepdims=True)
    exp = np.exp(sub)
    probs_masked = exp / exp.sum(axis=1, keepdims=True)
    probs = np.zeros_like(logits)
    probs[:, mask] = probs_masked
    return probs


def _mask_positions(mask: np.ndarray, labels: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(mask, labels)
    bad = (pos >= len(mask)) | (mask[np.minimum(pos, len(mask) - 1)] != labels)
    if np.any(bad):
        leaked = sorted(set(labels[bad].tolist()))
        raise ProtocolError(f"labels {leaked} are outside the class mask {mask.tolist()}")
    return pos


def true_class_probabilities(
    logits: DenseMatrix,
    labels: np.ndarray,
    class_mask: Optional[Iterable[int]],
) -> np.ndarray:
    """Masked softmax probability assigned to each sample's true class."""
    mask = _mask_array(class_mask, logits.shape[1])
    pos = _mask_positions(mask, np.asarray(labels, dtype=np.int64))
    probs = masked_softmax(logits, mask)
    return probs[np.arange(len(labels)), mask[pos]]


def softmax_ce(
    logits: DenseMatrix,
    labels: np.ndarray,
    class_mask: Optional[Iterable[int]] = None,
) -> tuple[float, DenseMatrix]:
    """Mean cross-entropy over the masked softmax, plus dLoss/dLogits.

    Gradients are exactly zero at classes outside the mask. A label outside
    the mask means task data leaked across the incremental protocol and
    raises :class:`ProtocolError`.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or len(labels) != logits.shape[0]:
        raise ShapeError(f"logits {logits.shape} incompatible with {len(labels)} labels")
    if logits.shape[0] == 0:
        raise ShapeError("cannot compute loss of an empty batch")
    mask = _mask_array(class_mask, logits.shape[1])
    pos = _mask_positions(mask, labels)

    sub = logits[:, mask]
    sub = sub - sub.max(axis=1, keepdims=True)
    exp = np.exp(sub)
    denom = exp.sum(axis=1, keepdims=True)
    log_probs = sub - np.log(denom)
    n = logits.shape[0]
    loss = float(-log_probs[np.arange(n), pos].mean())

    probs = exp / denom
    probs[np.arange(n), pos] -= 1.0
    d_logits = np.zeros_like(logits)
    d_logits[:, mask] = probs / n
    return loss, d_logits


def backward(model: MlpModel, cache: ForwardCache, d_logits: DenseMatrix) -> Gradients:
    """Exact gradients of the (masked) loss w.r.t. every weight and bias."""
    if len(cache.activations) != model.num_layers:
        raise ShapeError(
            f"cache holds {len(cache.activations)} activation sets, "
            f"model has {model.num_layers} layers"
        )
    if d_logits.shape != (cache.activations[0].shape[0], model.output_dim):
        raise ShapeError(f"d_logits shape {d_logits.shape} does not match cache/model")

    d_weights: list[np.ndarray] = [None] * model.num_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * model.num_layers  # type: ignore[list-item]
    delta = d_logits
    for layer in range(model.num_layers - 1, -1, -1):
        d_weights[layer] = cache.activations[layer].T @ delta
        d_biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (cache.pre_activations[layer - 1] > 0.0)
    return Gradients(d_weights=d_weights, d_biases=d_biases)


@dataclass
class PrototypeClassifier:
    """One center per class; classification by cosine similarity."""

    centers: np.ndarray           # (num_classes_seen, dim)
    class_ids: tuple[int, ...]


def class_centers(
    features: DenseMatrix,
    labels: np.ndarray,
    class_ids: Iterable[int],
) -> PrototypeClassifier:
    """Per-class mean of the feature rows, in the order of ``class_ids``."""
    labels = np.asarray(labels, dtype=np.int64)
    ids = tuple(int(c) for c in class_ids)
    centers = np.empty((len(ids), features.shape[1]), dtype=np.float64)
    for i, cid in enumerate(ids):
        rows = features[labels == cid]
        if rows.shape[0] == 0:
            raise EstimationError(f"class {cid} has no samples to average")
        centers[i] = rows.mean(axis=0)
    return PrototypeClassifier(centers=centers, class_ids=ids)


def cosine_scores(proto: PrototypeClassifier, features: DenseMatrix) -> np.ndarray:
    """Cosine similarity of every feature row against every center.

    A zero-norm row or center contributes score 0 for the affected pairs
    rather than NaN.
    """
    if features.shape[1] != proto.centers.shape[1]:
        raise ShapeError(
            f"features dim {features.shape[1]} != prototype dim {proto.centers.shape[1]}"
        )
    f_norm = np.linalg.norm(features, axis=1)
    c_norm = np.linalg.norm(proto.centers, axis=1)
    denom = np.outer(f_norm, c_norm)
    raw = features @ proto.centers.T
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(denom > 0.0, raw / np.where(denom > 0.0, denom, 1.0), 0.0)
    return scores


def cosine_classify(proto: PrototypeClassifier, features: DenseMatrix) -> np.ndarray:
    """Predicted class id per row: argmax cosine similarity (first wins ties)."""
    scores = cosine_scores(proto, features)
    ids = np.asarray(proto.class_ids, dtype=np.int64)
    return ids[np.argmax(scores, axis=1)]
