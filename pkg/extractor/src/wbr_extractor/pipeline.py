"""CIFAR-100 through a frozen ViT-B/16, dumped as WBRF feature files.

Stages: load the split, preprocess (resize to 224, normalize), encode in
batches with the frozen backbone, write one float32 row per image. Pure
inference with no augmentation, so running twice gives identical bytes.

torch and torchvision are imported inside the functions that need them;
spec validation and the file codec work without them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .wbrf import write_feature_file

RESIZE = 224
OUTPUT_DIM = 768
NORM_MODES = ("unit-range", "imagenet-standard")
SPLITS = ("train", "test")
DATASETS = {"cifar100": 100}  # name -> class count

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ExtractSpec:
    """One extraction job: which split, how to normalize, where to write."""

    dataset: str = "cifar100"
    split: str = "train"
    norm: str = "unit-range"
    out: str = "features.wbrf"
    batch_size: int = 64
    data_dir: Optional[str] = None

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}, expected one of {tuple(DATASETS)}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.norm not in NORM_MODES:
            raise ValueError(f"norm must be one of {NORM_MODES}, got {self.norm!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def num_classes(self) -> int:
        return DATASETS[self.dataset]


def load_cifar100(spec: ExtractSpec) -> tuple[np.ndarray, np.ndarray]:
    """Fetch the split as (images uint8 (n,32,32,3), labels int64).

    Download and checksum failures propagate untouched.
    """
    from torchvision.datasets import CIFAR100

    root = spec.data_dir or os.environ.get("WBR_CIFAR_DIR") or "./data"
    ds = CIFAR100(root=root, train=spec.split == "train", download=True)
    return np.asarray(ds.data, dtype=np.uint8), np.asarray(ds.targets, dtype=np.int64)


def preprocess(images: np.ndarray, norm: str):
    """uint8 (n,h,w,3) -> float32 torch tensor (n,3,224,224).

    unit-range keeps pixels in [0,1]; imagenet-standard additionally
    subtracts the channel means and divides by the channel stds the
    backbone was trained with.
    """
    import torch
    from torchvision.transforms import functional as TF

    x = torch.from_numpy(np.ascontiguousarray(images)).float().div_(255.0)
    x = x.permute(0, 3, 1, 2)
    x = TF.resize(x, [RESIZE, RESIZE], antialias=True)
    if norm == "imagenet-standard":
        mean = torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(IMAGENET_STD).view(1, 3, 1, 1)
        x = (x - mean) / std
    return x


def build_encoder():
    """ViT-B/16 with ImageNet-1k classification weights, head removed.

    What is left maps (n,3,224,224) to the 768-dim [CLS] embedding.
    Weight download failures propagate untouched.
    """
    import torch
    from torchvision.models import ViT_B_16_Weights, vit_b_16

    model = vit_b_16(weights=ViT_B_16_Weights.IMAGENET1K_V1)
    model.heads = torch.nn.Identity()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def extract(
    spec: ExtractSpec,
    encoder: Optional[Callable] = None,
    dataset_provider: Optional[Callable[[ExtractSpec], tuple]] = None,
) -> dict:
    """Run the full pipeline and write ``spec.out``; returns a summary dict.

    ``encoder`` and ``dataset_provider`` exist for tests; by default the
    real backbone and the real dataset are used.
    """
    import torch

    images, labels = (dataset_provider or load_cifar100)(spec)
    labels = np.asarray(labels, dtype=np.int64)
    enc = encoder if encoder is not None else build_encoder()

    chunks = []
    with torch.no_grad():
        for start in range(0, len(images), spec.batch_size):
            x = preprocess(images[start:start + spec.batch_size], spec.norm)
            z = enc(x)
            if hasattr(z, "detach"):
                z = z.detach().cpu().numpy()
            chunks.append(np.asarray(z, dtype=np.float32))

    features = np.concatenate(chunks, axis=0) if chunks else np.empty((0, OUTPUT_DIM), np.float32)
    if features.shape != (len(labels), OUTPUT_DIM):
        raise ValueError(
            f"encoder produced shape {features.shape}, expected ({len(labels)}, {OUTPUT_DIM})"
        )

    sidecar = {
        "kind": "frozen-encoder-features",
        "dataset": spec.dataset,
        "split": spec.split,
        "normalization": spec.norm,
        "resize": RESIZE,
        "encoder": "vit_b_16/IMAGENET1K_V1",
        "count": int(len(labels)),
    }
    write_feature_file(spec.out, features, labels, spec.num_classes, sidecar=sidecar)
    return {
        "path": str(Path(spec.out)),
        "count": int(len(labels)),
        "dim": OUTPUT_DIM,
        "num_classes": spec.num_classes,
        "normalization": spec.norm,
    }
