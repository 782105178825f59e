"""Shared test utilities: synthetic datasets and parameter flattening."""

import os
from pathlib import Path

import numpy as np
import pytest

from wbr import LabeledDataset, load_mnist_idx
from wbr.model import MlpModel

FIXTURES = Path(__file__).parent / "fixtures"


def make_blobs(num_classes=6, dim=16, n_train=30, n_test=10, seed=0, spread=0.25):
    """Separable Gaussian blobs sharing centers across the two splits."""
    r = np.random.default_rng(seed)
    centers = r.normal(0.0, 1.0, (num_classes, dim))

    def split(n_per, sub):
        feats = np.concatenate(
            [centers[c] + spread * sub.normal(0.0, 1.0, (n_per, dim)) for c in range(num_classes)]
        )
        labels = np.repeat(np.arange(num_classes), n_per).astype(np.int64)
        return LabeledDataset(feats, labels, num_classes)

    return split(n_train, r), split(n_test, r)


def mnist_or_skip():
    """The real idx files, or an explicit skip when WBR_DATA_DIR is unset."""
    root = os.environ.get("WBR_DATA_DIR")
    if not root:
        pytest.skip("requires MNIST idx files; set WBR_DATA_DIR to a directory holding them")
    root = Path(root)

    def find(stem):
        for cand in (root / stem, root / (stem + ".gz")):
            if cand.exists():
                return cand
        pytest.skip(f"WBR_DATA_DIR is set but {stem}[.gz] is missing under {root}")

    train = load_mnist_idx(find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"))
    test = load_mnist_idx(find("t10k-images-idx3-ubyte"), find("t10k-labels-idx1-ubyte"))
    return train, test


def get_params(model: MlpModel) -> np.ndarray:
    """All weights and biases as one flat vector (for finite differences)."""
    return np.concatenate([t.ravel() for t in model.weights + model.biases])


def set_params(model: MlpModel, flat: np.ndarray) -> None:
    cursor = 0
    for tensor in model.weights + model.biases:
        n = tensor.size
        tensor[...] = flat[cursor : cursor + n].reshape(tensor.shape)
        cursor += n


def grads_flat(grads) -> np.ndarray:
    return np.concatenate([t.ravel() for t in grads.d_weights + grads.d_biases])
