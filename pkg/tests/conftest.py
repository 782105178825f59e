from pathlib import Path

import pytest

from wbr import load_feature_file

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def synthetic_features():
    """The checked-in 8-class blob fixture as (train, test)."""
    return (
        load_feature_file(FIXTURES / "synthetic_train.wbrf"),
        load_feature_file(FIXTURES / "synthetic_test.wbrf"),
    )


@pytest.fixture
def feature_config(tmp_path):
    """A minimal features-kind experiment config dict pointing at the fixture."""
    return {
        "experiment": {
            "method": "wbr",
            "seeds": [0],
            "output_dir": str(tmp_path / "out"),
        },
        "dataset": {
            "kind": "features",
            "train": str(FIXTURES / "synthetic_train.wbrf"),
            "test": str(FIXTURES / "synthetic_test.wbrf"),
        },
        "scenario": {"base_size": 2, "increment": 2},
        "model": {"hidden_layers": 0, "hidden_width": 32},
        "train": {
            "lr": 0.05,
            "epochs_per_task": 3,
            "batch_size": 16,
            "alpha": 0.5,
        },
    }
