import pytest

from wbr.config import (
    DatasetConfig,
    ExperimentConfig,
    apply_overrides,
    parse_override_value,
)
from wbr.errors import ConfigError
from wbr.optim import ClipPolicy

FULL_TOML = """
[experiment]
method = "wbr"
seeds = [0, 1, 2]
output_dir = "runs/demo"

[dataset]
kind = "features"
train = "train.wbrf"
test = "test.wbrf"

[scenario]
base_size = 0
increment = 1
class_order_seed = 5

[model]
hidden_layers = 2
hidden_width = 32

[train]
lr = 0.01
epochs_per_task = 10
batch_size = 16
alpha = 0.5
"""


def _write(tmp_path, text):
    path = tmp_path / "exp.toml"
    path.write_text(text)
    return path


def test_full_file_parses(tmp_path):
    cfg = ExperimentConfig.from_toml(_write(tmp_path, FULL_TOML))
    assert cfg.method == "wbr"
    assert cfg.seeds == [0, 1, 2]
    assert cfg.dataset.kind == "features"
    assert cfg.base_size == 0 and cfg.increment == 1 and cfg.class_order_seed == 5
    assert cfg.hidden_layers == 2
    train = cfg.train_config(seed=7)
    assert train.seed == 7
    assert train.lr == 0.01
    assert train.clip_new == ClipPolicy.global_norm(0.5)
    assert train.clip_memory == ClipPolicy.none()
    assert train.replay_enabled is True
    assert cfg.layer_dims(784, 10) == [784, 32, 32, 10]


def test_defaults_when_sections_missing():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.method == "wbr"
    assert cfg.seeds == [0]
    assert cfg.dataset.kind == "mnist"
    assert cfg.base_size == 2 and cfg.increment == 2
    assert cfg.hidden_layers == 1 and cfg.hidden_width == 32
    train = cfg.train_config(0)
    assert train.batch_size == 16 and train.epochs_per_task == 10


def test_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(ConfigError, match="config"):
        ExperimentConfig.from_toml(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="invalid TOML"):
        ExperimentConfig.from_toml(_write(tmp_path, "[broken"))


def test_overrides_parse_toml_values():
    assert parse_override_value("0.5") == 0.5
    assert parse_override_value("3") == 3
    assert parse_override_value("true") is True
    assert parse_override_value("[1, 2]") == [1, 2]
    assert parse_override_value('"quoted"') == "quoted"
    assert parse_override_value("plain-string") == "plain-string"


def test_apply_overrides_dotted_paths():
    raw = {"train": {"lr": 0.01}}
    out = apply_overrides(raw, ["train.lr=0.1", "model.hidden_layers=2",
                                "experiment.seeds=[4,5]"])
    assert out["train"]["lr"] == 0.1
    assert out["model"]["hidden_layers"] == 2
    assert out["experiment"]["seeds"] == [4, 5]
    assert raw["train"]["lr"] == 0.01  # input untouched


def test_apply_overrides_bad_assignment():
    with pytest.raises(ConfigError, match="--set"):
        apply_overrides({}, ["no-equals-sign"])
    with pytest.raises(ConfigError, match="not a table"):
        apply_overrides({"train": {"lr": 0.1}}, ["train.lr.deep=1"])


def test_override_through_from_toml(tmp_path):
    cfg = ExperimentConfig.from_toml(_write(tmp_path, FULL_TOML),
                                     overrides=["train.lr=0.1", "scenario.increment=2"])
    assert cfg.train["lr"] == 0.1
    assert cfg.increment == 2


def test_clip_shorthand_and_tables(tmp_path):
    toml = FULL_TOML + "\nbeta = 0.1\n"
    cfg = ExperimentConfig.from_toml(_write(tmp_path, toml))
    train = cfg.train_config(0)
    assert train.clip_memory == ClipPolicy.global_norm(0.1)

    explicit = FULL_TOML.replace("alpha = 0.5",
                                 "[train.clip_new]\nmode = \"element-clamp\"\nthreshold = 0.01")
    cfg2 = ExperimentConfig.from_toml(_write(tmp_path, explicit))
    assert cfg2.train_config(0).clip_new == ClipPolicy.clamp(0.01)


def test_clip_shorthand_conflicts_with_table(tmp_path):
    toml = FULL_TOML + "\n[train.clip_new]\nmode = \"none\"\n"
    with pytest.raises(ConfigError, match="train.clip_new"):
        ExperimentConfig.from_toml(_write(tmp_path, toml))


def test_clip_table_validation():
    raw = {"train": {"clip_memory": {"mode": "sideways"}}}
    with pytest.raises(ConfigError, match="train.clip_memory.mode"):
        ExperimentConfig.from_dict(raw)
    raw = {"train": {"clip_memory": {"mode": "global-l2-norm"}}}
    with pytest.raises(ConfigError, match="train.clip_memory"):
        ExperimentConfig.from_dict(raw)


def test_method_and_seed_validation():
    with pytest.raises(ConfigError, match="experiment.method"):
        ExperimentConfig.from_dict({"experiment": {"method": "ewc"}})
    with pytest.raises(ConfigError, match="experiment.seeds"):
        ExperimentConfig.from_dict({"experiment": {"seeds": []}})
    with pytest.raises(ConfigError, match="experiment.seeds"):
        ExperimentConfig.from_dict({"experiment": {"seeds": [0, "x"]}})


def test_finetune_replay_rules():
    cfg = ExperimentConfig.from_dict({"experiment": {"method": "finetune"}})
    assert cfg.train_config(0).replay_enabled is False
    with pytest.raises(ConfigError, match="train.replay"):
        ExperimentConfig.from_dict({"experiment": {"method": "finetune"},
                                    "train": {"replay": True}})
    cfg2 = ExperimentConfig.from_dict({"train": {"replay": False}})
    assert cfg2.train_config(0).replay_enabled is False


def test_update_rule_validation():
    with pytest.raises(ConfigError, match="train.update_rule"):
        ExperimentConfig.from_dict({"train": {"update_rule": "tandem"}})
    cfg = ExperimentConfig.from_dict({"train": {"update_rule": "joint"}})
    assert cfg.train_config(0).update_rule == "joint"


def test_model_section_validation():
    with pytest.raises(ConfigError, match="model.hidden_layers"):
        ExperimentConfig.from_dict({"model": {"hidden_layers": -1}})
    with pytest.raises(ConfigError, match="model.hidden_width"):
        ExperimentConfig.from_dict({"model": {"hidden_width": 0}})
    with pytest.raises(ConfigError, match="model.hidden_layers"):
        ExperimentConfig.from_dict({"model": {"hidden_layers": "two"}})


def test_features_kind_requires_paths():
    with pytest.raises(ConfigError, match="dataset.train"):
        ExperimentConfig.from_dict({"dataset": {"kind": "features"}})
    with pytest.raises(ConfigError, match="dataset.kind"):
        ExperimentConfig.from_dict({"dataset": {"kind": "imagenet"}})


def test_dataset_dir_env_fallback(monkeypatch):
    ds = DatasetConfig(kind="mnist")
    monkeypatch.delenv("WBR_DATA_DIR", raising=False)
    with pytest.raises(ConfigError, match="WBR_DATA_DIR"):
        ds.resolve_dir()
    monkeypatch.setenv("WBR_DATA_DIR", "/somewhere/mnist")
    assert str(ds.resolve_dir()) == "/somewhere/mnist"
    explicit = DatasetConfig(kind="mnist", directory="/explicit")
    assert str(explicit.resolve_dir()) == "/explicit"


def test_raw_echo_round_trips():
    raw = {"experiment": {"seeds": [1]}, "train": {"lr": 0.02}}
    cfg = ExperimentConfig.from_dict(raw)
    echo = cfg.to_dict()
    assert echo == raw
    echo["train"]["lr"] = 99.0  # deep copy, not a view
    assert cfg.raw["train"]["lr"] == 0.02
