"""Frozen-backbone feature extraction into WBRF files."""

from .pipeline import NORM_MODES, OUTPUT_DIM, RESIZE, ExtractSpec, build_encoder, extract, preprocess
from .wbrf import read_feature_file, write_feature_file

__version__ = "0.1.0"

__all__ = [
    "ExtractSpec",
    "NORM_MODES",
    "OUTPUT_DIM",
    "RESIZE",
    "build_encoder",
    "extract",
    "preprocess",
    "read_feature_file",
    "write_feature_file",
]
