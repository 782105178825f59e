import json

import numpy as np
import pytest

from helpers import make_blobs
from wbr.config import ExperimentConfig
from wbr.data import write_feature_file
from wbr.errors import ComparabilityError, ConfigError
from wbr.experiments import (
    build_report,
    footprint_report,
    load_dataset,
    run_experiment,
    run_grid,
)
from wbr.memory import MemoryStore, MemoryVector, save_store
from wbr.trainer import RunRecord


def test_run_experiment_writes_all_artifacts(feature_config, tmp_path):
    feature_config["experiment"]["seeds"] = [0, 1]
    cfg = ExperimentConfig.from_dict(feature_config)
    summary = run_experiment(cfg)
    out = tmp_path / "out"
    for seed in (0, 1):
        assert (out / f"runrecord_seed{seed}.json").exists()
        assert (out / f"stages_seed{seed}.csv").exists()
    assert (out / "summary.json").exists()

    records = [RunRecord.load(out / f"runrecord_seed{s}.json") for s in (0, 1)]
    finals = [r.final_accuracy for r in records]
    assert summary["final_a_b"]["per_seed"] == finals
    assert summary["final_a_b"]["mean"] == pytest.approx(np.mean(finals))
    assert summary["final_a_b"]["std"] == pytest.approx(np.std(finals, ddof=1))
    assert summary["seeds"] == [0, 1]
    # stage csv has one line per task plus header; fixture is 8 classes base 2 inc 2
    lines = (out / "stages_seed0.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 4


def test_run_experiment_single_seed_std_zero(feature_config):
    cfg = ExperimentConfig.from_dict(feature_config)
    summary = run_experiment(cfg)
    assert summary["final_a_b"]["std"] == 0.0


def test_config_echo_lands_in_run_record(feature_config, tmp_path):
    cfg = ExperimentConfig.from_dict(feature_config)
    run_experiment(cfg)
    record = json.loads((tmp_path / "out" / "runrecord_seed0.json").read_text())
    assert record["config"]["train"]["alpha"] == 0.5
    assert record["scenario"]["num_classes"] == 8


def test_simplecil_method_dispatch(feature_config, tmp_path):
    feature_config["experiment"]["method"] = "simplecil"
    feature_config["train"] = {}
    cfg = ExperimentConfig.from_dict(feature_config)
    summary = run_experiment(cfg)
    assert summary["method"] == "simplecil"
    record = json.loads((tmp_path / "out" / "runrecord_seed0.json").read_text())
    assert record["model"]["prototype_classes"] == 8


def test_load_dataset_feature_mismatch(tmp_path):
    train, _ = make_blobs(num_classes=6, dim=4)
    other, _ = make_blobs(num_classes=5, dim=4)
    write_feature_file(tmp_path / "train.wbrf", train)
    write_feature_file(tmp_path / "test.wbrf", other)
    cfg = ExperimentConfig.from_dict({
        "dataset": {"kind": "features",
                    "train": str(tmp_path / "train.wbrf"),
                    "test": str(tmp_path / "test.wbrf")},
    })
    with pytest.raises(ComparabilityError):
        load_dataset(cfg)


def test_load_dataset_missing_idx_files(tmp_path, monkeypatch):
    monkeypatch.setenv("WBR_DATA_DIR", str(tmp_path))
    cfg = ExperimentConfig.from_dict({"dataset": {"kind": "mnist"}})
    with pytest.raises(ConfigError, match="train-images"):
        load_dataset(cfg)


# -- grids --------------------------------------------------------------------


def test_grid_sweeps_cartesian_product(feature_config, tmp_path):
    feature_config["train"]["epochs_per_task"] = 1
    cfg = ExperimentConfig.from_dict(feature_config)
    rows = run_grid(cfg, {"lr": [0.05, 0.01], "alpha": [0.5, None]})
    assert len(rows) == 4
    out = tmp_path / "out"
    assert (out / "grid.csv").exists() and (out / "grid.md").exists()
    # one run directory per cell, each with its own summary
    names = {row["cell"] for row in rows}
    assert names == {
        "alpha-0.5__lr-0.05", "alpha-0.5__lr-0.01",
        "alpha-unset__lr-0.05", "alpha-unset__lr-0.01",
    }
    for name in names:
        assert (out / name / "summary.json").exists()
    grid_csv = (out / "grid.csv").read_text().strip().split("\n")
    assert grid_csv[0] == "cell,alpha,lr,final_a_b_mean,final_a_b_std,average_accuracy_mean"
    assert len(grid_csv) == 5
    # unset alpha means the config really dropped the clip
    unset_dir = out / "alpha-unset__lr-0.05"
    record = json.loads((unset_dir / "runrecord_seed0.json").read_text())
    assert "alpha" not in record["config"]["train"]


def test_grid_parallel_jobs_match_serial(feature_config, tmp_path):
    feature_config["train"]["epochs_per_task"] = 1
    cfg = ExperimentConfig.from_dict(feature_config)
    serial = run_grid(cfg, {"lr": [0.05, 0.01]},
                      output_dir=tmp_path / "serial", jobs=1)
    parallel = run_grid(cfg, {"lr": [0.05, 0.01]},
                        output_dir=tmp_path / "parallel", jobs=2)
    key = lambda rows: sorted((r["cell"], r["final_a_b_mean"]) for r in rows)
    assert key(serial) == key(parallel)


def test_grid_unknown_axis(feature_config):
    cfg = ExperimentConfig.from_dict(feature_config)
    with pytest.raises(ConfigError, match="grid.axes"):
        run_grid(cfg, {"dropout": [0.1]})
    with pytest.raises(ConfigError, match="at least one"):
        run_grid(cfg, {})


# -- reports ------------------------------------------------------------------


def _run_variant(feature_config, tmp_path, name, **train_overrides):
    cfg_dict = json.loads(json.dumps(feature_config))
    cfg_dict["experiment"]["output_dir"] = str(tmp_path / name)
    cfg_dict["train"].update(train_overrides)
    summary = run_experiment(ExperimentConfig.from_dict(cfg_dict))
    return tmp_path / name, summary


def test_report_with_baseline_deltas(feature_config, tmp_path):
    base_dir, base_summary = _run_variant(feature_config, tmp_path, "base",
                                          epochs_per_task=1)
    run_dir, run_summary = _run_variant(feature_config, tmp_path, "better",
                                        epochs_per_task=3)
    markdown = build_report([run_dir], tmp_path / "report.md", baseline_dir=base_dir)
    delta = run_summary["final_a_b"]["mean"] - base_summary["final_a_b"]["mean"]
    assert f"{delta:+.2f}" in markdown
    assert "baseline (wbr)" in markdown
    assert (tmp_path / "report.md").exists()
    curves = (tmp_path / "report.curves.csv").read_text().strip().split("\n")
    assert curves[0] == "stage,baseline,better"
    assert len(curves) == 1 + 4


def test_report_requires_comparable_scenarios(feature_config, tmp_path):
    dir_a, _ = _run_variant(feature_config, tmp_path, "a", epochs_per_task=1)
    cfg_dict = json.loads(json.dumps(feature_config))
    cfg_dict["experiment"]["output_dir"] = str(tmp_path / "b")
    cfg_dict["scenario"]["increment"] = 3
    run_experiment(ExperimentConfig.from_dict(cfg_dict))
    with pytest.raises(ComparabilityError):
        build_report([dir_a, tmp_path / "b"], tmp_path / "r.md")


def test_report_missing_summary(tmp_path):
    with pytest.raises(ConfigError, match="summary.json"):
        build_report([tmp_path / "nothing"], tmp_path / "r.md")


# -- footprint ----------------------------------------------------------------


def test_footprint_report(tmp_path):
    store = MemoryStore()
    store.append([MemoryVector(class_id=i, vector=np.zeros(768), source_task=0)
                  for i in range(95)])
    path = tmp_path / "store.wbrf"
    save_store(store, path)
    payload = footprint_report(path, "32x32x3")
    assert payload["equivalent_samples"] == 23.75
    assert payload["num_vectors"] == 95
    assert payload["vector_dim"] == 768


def test_footprint_bad_shape(tmp_path):
    with pytest.raises(ConfigError, match="footprint.shape"):
        footprint_report(tmp_path / "x.wbrf", "32x32")
    with pytest.raises(ConfigError, match="footprint.shape"):
        footprint_report(tmp_path / "x.wbrf", "axbxc")


def test_footprint_missing_store(tmp_path):
    with pytest.raises(ConfigError, match="footprint.store"):
        footprint_report(tmp_path / "absent.wbrf", "32x32x3")
