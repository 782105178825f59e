"""Writer for the WBRF feature container.

Layout, all little-endian:

    offset  size  field
    0       4     magic  b"WBRF"
    4       4     version (u32, currently 1)
    8       8     count   (u64, number of rows)
    16      4     dim     (u32, features per row)
    20      4     num_classes (u32)
    24      ...   count*dim float32 payload, row-major
    ...     ...   count uint32 labels

The training harness that consumes these files ships its own loader; this
module only has to emit bytes that loader accepts, plus enough of a reader
to self-check a freshly written file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

MAGIC = b"WBRF"
VERSION = 1
_HEADER = struct.Struct("<4sIQII")  # magic, version, count, dim, num_classes


def write_feature_file(
    path: Union[str, Path],
    features: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    sidecar: Optional[dict] = None,
) -> Path:
    """Write one f32 row per sample plus u32 labels. Bit-deterministic.

    ``sidecar``, when given, lands in ``<path>.json``; consumers ignore it,
    it exists to record provenance such as the normalization mode.
    """
    path = Path(path)
    features = np.ascontiguousarray(features, dtype="<f4")
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {features.shape}")
    if labels.ndim != 1 or len(labels) != features.shape[0]:
        raise ValueError(f"{features.shape[0]} feature rows but {labels.shape} labels")
    if not np.all(np.isfinite(features)):
        raise ValueError("features contain non-finite values; refusing to write")
    if len(labels) and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(
            f"labels must lie in [0, {num_classes}), "
            f"found range [{labels.min()}, {labels.max()}]"
        )

    count, dim = features.shape
    header = _HEADER.pack(MAGIC, VERSION, count, dim, num_classes)
    path.write_bytes(header + features.tobytes() + np.ascontiguousarray(labels, dtype="<u4").tobytes())
    if sidecar is not None:
        path.with_name(path.name + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_feature_file(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray, int]:
    """Self-check reader: (features f32, labels i64, num_classes)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: too short for a WBRF header ({len(raw)} bytes)")
    magic, version, count, dim, num_classes = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + count * dim * 4 + count * 4
    if len(raw) != expected:
        raise ValueError(f"{path}: file holds {len(raw)} bytes, layout requires {expected}")
    features = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=_HEADER.size)
    labels = np.frombuffer(raw, dtype="<u4", count=count, offset=_HEADER.size + count * dim * 4)
    return features.reshape(count, dim).copy(), labels.astype(np.int64), num_classes
