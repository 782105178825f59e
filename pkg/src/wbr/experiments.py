"""Experiment orchestration: single runs, hyperparameter grids, reports.

A run directory contains one JSON record and one per-stage CSV per seed,
plus ``summary.json`` with mean/std across seeds. A grid directory holds one
such run directory per cell plus ``grid.csv`` and ``grid.md``. Reports
aggregate finished run directories and compare them against a baseline.
"""

from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .config import MNIST_FILES, ExperimentConfig
from .data import LabeledDataset, load_feature_file, load_mnist_idx
from .errors import ComparabilityError, ConfigError
from .linalg import SeededRng
from .memory import load_store, memory_footprint_in_samples
from .metrics import write_stage_csv
from .model import MlpModel
from .scenario import build_scenario
from .trainer import RunRecord, run_continual, simplecil_run

log = logging.getLogger(__name__)


def _find_idx(directory: Path, stem: str) -> Path:
    """The idx files ship plain or gzipped; accept either."""
    for candidate in (directory / stem, directory / (stem + ".gz")):
        if candidate.exists():
            return candidate
    raise ConfigError("dataset.dir", f"{stem}[.gz] not found under {directory}")


def load_dataset(cfg: ExperimentConfig) -> tuple[LabeledDataset, LabeledDataset]:
    ds = cfg.dataset
    if ds.kind == "mnist":
        directory = ds.resolve_dir()
        train = load_mnist_idx(
            _find_idx(directory, MNIST_FILES["train_images"]),
            _find_idx(directory, MNIST_FILES["train_labels"]),
        )
        test = load_mnist_idx(
            _find_idx(directory, MNIST_FILES["test_images"]),
            _find_idx(directory, MNIST_FILES["test_labels"]),
        )
    else:
        train = load_feature_file(ds.train_path)
        test = load_feature_file(ds.test_path)
    if train.num_classes != test.num_classes or train.dim != test.dim:
        raise ComparabilityError(
            f"train/test disagree: {train.num_classes}c/{train.dim}d vs "
            f"{test.num_classes}c/{test.dim}d"
        )
    return train, test


def run_one_seed(
    cfg: ExperimentConfig,
    seed: int,
    train: LabeledDataset,
    test: LabeledDataset,
) -> RunRecord:
    scenario = build_scenario(
        train, test, cfg.base_size, cfg.increment, class_order_seed=cfg.class_order_seed
    )
    echo = cfg.to_dict()
    if cfg.method == "simplecil":
        return simplecil_run(scenario, train, test, config_echo=echo)
    train_cfg = cfg.train_config(seed)
    model = MlpModel(cfg.layer_dims(train.dim, train.num_classes), SeededRng(seed))
    return run_continual(
        model, scenario, train, test, train_cfg,
        observer=None, method=cfg.method, config_echo=echo,
    )


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def summarize_records(records: Sequence[RunRecord]) -> dict:
    finals = [r.final_accuracy for r in records]
    means = [r.mean_accuracy for r in records]
    f_mean, f_std = _mean_std(finals)
    m_mean, m_std = _mean_std(means)
    return {
        "method": records[0].method,
        "seeds": [r.seed for r in records],
        "final_a_b": {"mean": f_mean, "std": f_std, "per_seed": finals},
        "average_accuracy": {"mean": m_mean, "std": m_std, "per_seed": means},
        "scenario": records[0].scenario,
        "num_stages": len(records[0].stages),
    }


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> dict:
    """Execute every seed of one configuration and persist the artifacts."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test = load_dataset(cfg)

    records = []
    for seed in cfg.seeds:
        log.info("method=%s seed=%d starting", cfg.method, seed)
        record = run_one_seed(cfg, seed, train, test)
        record.save(out / f"runrecord_seed{seed}.json")
        write_stage_csv(record.stages, out / f"stages_seed{seed}.csv")
        records.append(record)
        log.info("method=%s seed=%d final=%.2f", cfg.method, seed, record.final_accuracy)

    summary = summarize_records(records)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


# -- grids -------------------------------------------------------------------

GRID_AXES = {
    "lr": "train.lr",
    "alpha": "train.alpha",
    "beta": "train.beta",
    "momentum": "train.momentum",
    "hidden_layers": "model.hidden_layers",
    "epochs_per_task": "train.epochs_per_task",
}


def _set_path(raw: dict, dotted: str, value) -> None:
    node = raw
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    if value is None:
        node.pop(parts[-1], None)
    else:
        node[parts[-1]] = value


def _cell_name(assignment: dict) -> str:
    bits = []
    for key in sorted(assignment):
        value = assignment[key]
        bits.append(f"{key}-{'unset' if value is None else value}")
    return "__".join(bits).replace("/", "_")


def _run_cell(payload: tuple[dict, dict, str]) -> tuple[str, dict, dict]:
    raw, assignment, cell_dir = payload
    for axis, value in assignment.items():
        _set_path(raw, GRID_AXES[axis], value)
    cfg = ExperimentConfig.from_dict(raw)
    summary = run_experiment(cfg, output_dir=cell_dir)
    return cell_dir, assignment, summary


def run_grid(
    cfg: ExperimentConfig,
    axes: dict[str, list],
    output_dir: Optional[Union[str, Path]] = None,
    jobs: int = 1,
) -> list[dict]:
    """Cartesian sweep over ``axes``; one run directory per cell.

    Axis values may include ``None``, meaning "leave the knob unset"
    (e.g. an unclipped memory step in a clip-threshold sweep).
    """
    unknown = set(axes) - set(GRID_AXES)
    if unknown:
        raise ConfigError("grid.axes", f"unknown axes {sorted(unknown)}; known: {sorted(GRID_AXES)}")
    if not axes:
        raise ConfigError("grid.axes", "at least one axis is required")

    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = sorted(axes)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]
    payloads = [
        (cfg.to_dict(), assignment, str(out / _cell_name(assignment)))
        for assignment in cells
    ]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, payloads))
    else:
        results = [_run_cell(p) for p in payloads]

    rows = []
    for cell_dir, assignment, summary in results:
        row = {"cell": Path(cell_dir).name}
        row.update(assignment)
        row["final_a_b_mean"] = summary["final_a_b"]["mean"]
        row["final_a_b_std"] = summary["final_a_b"]["std"]
        row["average_accuracy_mean"] = summary["average_accuracy"]["mean"]
        rows.append(row)

    _write_grid_tables(out, names, rows)
    return rows


def _write_grid_tables(out: Path, axis_names: list[str], rows: list[dict]) -> None:
    header = ["cell"] + axis_names + ["final_a_b_mean", "final_a_b_std", "average_accuracy_mean"]
    csv_lines = [",".join(header)]
    md_lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        cells = []
        for key in header:
            value = row.get(key)
            if isinstance(value, float):
                cells.append(f"{value:.2f}")
            else:
                cells.append("unset" if value is None else str(value))
        csv_lines.append(",".join(cells))
        md_lines.append("| " + " | ".join(cells) + " |")
    (out / "grid.csv").write_text("\n".join(csv_lines) + "\n")
    (out / "grid.md").write_text("\n".join(md_lines) + "\n")


# -- reports -----------------------------------------------------------------


def _load_run_dir(run_dir: Path) -> tuple[dict, list[RunRecord]]:
    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        raise ConfigError("report.runs", f"{run_dir} has no summary.json")
    summary = json.loads(summary_path.read_text())
    records = [
        RunRecord.load(p) for p in sorted(run_dir.glob("runrecord_seed*.json"))
    ]
    return summary, records


def build_report(
    run_dirs: Sequence[Union[str, Path]],
    output_path: Union[str, Path],
    baseline_dir: Optional[Union[str, Path]] = None,
) -> str:
    """Summary table plus per-stage accuracy curves for finished runs.

    All runs (and the baseline, if given) must share a scenario fingerprint;
    accuracy deltas against different class schedules are meaningless.
    """
    loaded = [(Path(d), *_load_run_dir(Path(d))) for d in run_dirs]
    baseline = None
    if baseline_dir is not None:
        baseline = _load_run_dir(Path(baseline_dir))

    reference = baseline[0]["scenario"] if baseline else loaded[0][1]["scenario"]
    for run_dir, summary, _ in loaded:
        if summary["scenario"] != reference:
            raise ComparabilityError(
                f"{run_dir} ran scenario {summary['scenario']}, expected {reference}"
            )

    lines = ["# Run comparison", ""]
    header = "| run | final A_B | avg acc |"
    sep = "|---|---|---|"
    if baseline:
        header += " Δ final | Δ avg |"
        sep += "---|---|"
    lines += [header, sep]

    if baseline:
        b = baseline[0]
        lines.append(
            f"| baseline ({b['method']}) | {b['final_a_b']['mean']:.2f} "
            f"| {b['average_accuracy']['mean']:.2f} | | |"
        )
    for run_dir, summary, _ in loaded:
        row = (
            f"| {run_dir.name} ({summary['method']}) "
            f"| {summary['final_a_b']['mean']:.2f} "
            f"| {summary['average_accuracy']['mean']:.2f} |"
        )
        if baseline:
            d_final = summary["final_a_b"]["mean"] - baseline[0]["final_a_b"]["mean"]
            d_avg = summary["average_accuracy"]["mean"] - baseline[0]["average_accuracy"]["mean"]
            row += f" {d_final:+.2f} | {d_avg:+.2f} |"
        lines.append(row)

    curves = _curves_csv(loaded, baseline)
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text("\n".join(lines) + "\n")
    output_path.with_suffix(".curves.csv").write_text(curves)
    return "\n".join(lines) + "\n"


def _curves_csv(loaded, baseline) -> str:
    """Per-stage accuracy, one column per run, seed-averaged."""
    columns: list[tuple[str, list[float]]] = []
    if baseline:
        columns.append(("baseline", _stage_means(baseline[1])))
    for run_dir, _, records in loaded:
        columns.append((run_dir.name, _stage_means(records)))
    depth = max(len(c[1]) for c in columns)
    lines = ["stage," + ",".join(name for name, _ in columns)]
    for stage in range(depth):
        cells = [str(stage)]
        for _, series in columns:
            cells.append(f"{series[stage]:.4f}" if stage < len(series) else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _stage_means(records: Sequence[RunRecord]) -> list[float]:
    per_seed = np.asarray([[s.a_b for s in r.stages] for r in records])
    return [float(x) for x in per_seed.mean(axis=0)]


def footprint_report(store_path: Union[str, Path], sample_shape: str) -> dict:
    """Size of a saved memory store expressed in raw-sample equivalents.

    ``sample_shape`` is HxWxC, e.g. ``32x32x3``.
    """
    try:
        dims = tuple(int(p) for p in sample_shape.lower().split("x"))
    except ValueError:
        dims = ()
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ConfigError("footprint.shape", f"expected HxWxC like 32x32x3, got {sample_shape!r}")
    if not Path(store_path).exists():
        raise ConfigError("footprint.store", f"no such file: {store_path}")
    store = load_store(store_path)
    samples = memory_footprint_in_samples(store, dims)
    return {
        "store": str(store_path),
        "num_vectors": len(store),
        "vector_dim": int(store.vectors[0].vector.shape[0]) if len(store) else 0,
        "sample_shape": list(dims),
        "equivalent_samples": samples,
    }
