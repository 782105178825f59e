"""Dataset ingestion: MNIST IDX files and the WBRF feature-file codec.

WBRF is the package's own binary container for precomputed feature vectors
(one f32 row per sample, one u32 label per sample). Layout, all little-endian:

    offset  size  field
    0       4     magic  b"WBRF"
    4       4     version (u32, currently 1)
    8       8     count   (u64, number of samples)
    16      4     dim     (u32, features per sample)
    20      4     num_classes (u32)
    24      ...   count*dim float32 payload, row-major
    ...     ...   count uint32 labels

An optional ``<path>.json`` sidecar may carry class names or provenance;
loaders here never read it.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConsistencyError, FormatError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

WBRF_MAGIC = b"WBRF"
WBRF_VERSION = 1
_WBRF_HEADER = struct.Struct("<4sIQII")  # magic, version, count, dim, num_classes


@dataclass
class LabeledDataset:
    """Feature rows with integer class labels.

    features: (n_samples, dim) float64, row-major
    labels:   (n_samples,) int64, each in [0, num_classes)
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ConsistencyError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.ndim != 1 or len(self.labels) != self.features.shape[0]:
            raise ConsistencyError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ConsistencyError(
                f"labels must lie in [0, {self.num_classes}), "
                f"found range [{self.labels.min()}, {self.labels.max()}]"
            )

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def rows(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.features[indices], self.labels[indices]


def _read_idx_bytes(path: Union[str, Path]) -> bytes:
    """Read a file, transparently inflating gzip (MNIST ships gzipped)."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_mnist_idx(images_path: Union[str, Path], labels_path: Union[str, Path]) -> LabeledDataset:
    """Load an MNIST-style IDX image/label file pair.

    Pixels are flattened to one row per image and scaled to [0, 1] by /255;
    no further standardization is applied so replay vectors stay in pixel
    space. Always reports 10 classes.
    """
    img = _read_idx_bytes(images_path)
    lab = _read_idx_bytes(labels_path)
    if len(img) < 16 or struct.unpack(">I", img[:4])[0] != IDX_IMAGE_MAGIC:
        raise FormatError(f"{images_path}: not an IDX image file (magic mismatch)")
    if len(lab) < 8 or struct.unpack(">I", lab[:4])[0] != IDX_LABEL_MAGIC:
        raise FormatError(f"{labels_path}: not an IDX label file (magic mismatch)")

    n_img, rows, cols = struct.unpack(">III", img[4:16])
    n_lab = struct.unpack(">I", lab[4:8])[0]
    if n_img != n_lab:
        raise ConsistencyError(f"{n_img} images but {n_lab} labels")
    if len(img) - 16 != n_img * rows * cols:
        raise FormatError(f"{images_path}: payload holds {len(img) - 16} bytes, "
                          f"expected {n_img * rows * cols}")
    if len(lab) - 8 != n_lab:
        raise FormatError(f"{labels_path}: payload holds {len(lab) - 8} labels, expected {n_lab}")

    pixels = np.frombuffer(img, dtype=np.uint8, offset=16).reshape(n_img, rows * cols)
    labels = np.frombuffer(lab, dtype=np.uint8, offset=8).astype(np.int64)
    if len(labels) and labels.max() > 9:
        raise ConsistencyError(f"{labels_path}: label {labels.max()} outside 0..9")
    features = pixels.astype(np.float64) / 255.0
    return LabeledDataset(features=features, labels=labels, num_classes=10)


def load_feature_file(path: Union[str, Path]) -> LabeledDataset:
    """Load a WBRF feature file, widening the f32 payload to float64."""
    raw = Path(path).read_bytes()
    if len(raw) < _WBRF_HEADER.size:
        raise FormatError(f"{path}: too short for a WBRF header ({len(raw)} bytes)")
    magic, version, count, dim, num_classes = _WBRF_HEADER.unpack_from(raw, 0)
    if magic != WBRF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {WBRF_MAGIC!r}")
    if version != WBRF_VERSION:
        raise FormatError(f"{path}: unsupported WBRF version {version}")
    payload_bytes = count * dim * 4
    expected = _WBRF_HEADER.size + payload_bytes + count * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: file holds {len(raw)} bytes, layout requires {expected}")
    features = np.frombuffer(
        raw, dtype="<f4", count=count * dim, offset=_WBRF_HEADER.size
    ).astype(np.float64).reshape(count, dim)
    labels = np.frombuffer(
        raw, dtype="<u4", count=count, offset=_WBRF_HEADER.size + payload_bytes
    ).astype(np.int64)
    if len(labels) and labels.max() >= num_classes:
        raise ConsistencyError(f"{path}: label {labels.max()} >= num_classes {num_classes}")
    return LabeledDataset(features=features, labels=labels, num_classes=num_classes)


def write_feature_file(
    path: Union[str, Path],
    dataset: LabeledDataset,
    sidecar: Optional[dict] = None,
) -> None:
    """Write ``dataset`` in WBRF layout. Bit-deterministic for equal inputs.

    ``sidecar``, when given, is dumped as JSON next to the file; it is
    metadata only and ignored by every loader.
    """
    path = Path(path)
    count, dim = dataset.features.shape
    header = _WBRF_HEADER.pack(WBRF_MAGIC, WBRF_VERSION, count, dim, dataset.num_classes)
    payload = np.ascontiguousarray(dataset.features, dtype="<f4").tobytes()
    labels = np.ascontiguousarray(dataset.labels, dtype="<u4").tobytes()
    path.write_bytes(header + payload + labels)
    if sidecar is not None:
        path.with_name(path.name + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
