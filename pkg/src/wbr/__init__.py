"""Weight-balanced replay laboratory for class-incremental learning."""

from .config import ExperimentConfig
from .data import LabeledDataset, load_feature_file, load_mnist_idx, write_feature_file
from .errors import (
    ComparabilityError,
    ConfigError,
    ConsistencyError,
    EstimationError,
    FormatError,
    MetricError,
    NumericError,
    ProtocolError,
    ShapeError,
    WbrError,
)
from .linalg import SeededRng
from .memory import MemoryStore, load_store, memory_footprint_in_samples, save_store
from .model import MlpModel
from .optim import ClipPolicy, SgdState
from .scenario import Scenario, build_scenario
from .trainer import RunRecord, TrainConfig, run_continual, simplecil_run

__version__ = "0.1.0"

__all__ = [
    "ClipPolicy",
    "ComparabilityError",
    "ConfigError",
    "ConsistencyError",
    "EstimationError",
    "ExperimentConfig",
    "FormatError",
    "LabeledDataset",
    "MemoryStore",
    "MetricError",
    "MlpModel",
    "NumericError",
    "ProtocolError",
    "RunRecord",
    "Scenario",
    "SeededRng",
    "SgdState",
    "ShapeError",
    "TrainConfig",
    "WbrError",
    "build_scenario",
    "load_feature_file",
    "load_mnist_idx",
    "load_store",
    "memory_footprint_in_samples",
    "run_continual",
    "save_store",
    "simplecil_run",
    "write_feature_file",
    "__version__",
]
