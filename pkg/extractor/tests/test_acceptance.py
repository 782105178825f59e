"""Go/no-go checks against published accuracy bands.

Everything here needs real extracted features (and for the smoke test, the
real backbone weights), so each test skips with instructions when the
environment lacks them. Nothing is weakened to pass offline.
"""

import functools
import os
from pathlib import Path

import numpy as np
import pytest

wbr = pytest.importorskip("wbr")

from wbr_extractor.pipeline import build_encoder, preprocess

from conftest import stub_images


@functools.lru_cache(maxsize=1)
def _load_features():
    root = os.environ.get("WBR_FEATURES_DIR")
    if not root:
        pytest.skip("requires extracted features; set WBR_FEATURES_DIR to a directory "
                    "holding features_train.wbrf and features_test.wbrf")
    train_p = Path(root) / "features_train.wbrf"
    test_p = Path(root) / "features_test.wbrf"
    if not train_p.exists() or not test_p.exists():
        pytest.skip(f"WBR_FEATURES_DIR={root} lacks features_train.wbrf / features_test.wbrf")
    return wbr.load_feature_file(train_p), wbr.load_feature_file(test_p)


def _balanced_run(momentum=0.0):
    train, test = _load_features()
    sc = wbr.build_scenario(train, test, base_size=5, increment=5)
    cfg = wbr.TrainConfig(lr=0.01, epochs_per_task=3, batch_size=16, momentum=momentum,
                          clip_new=wbr.ClipPolicy.global_norm(0.5), seed=0)
    model = wbr.MlpModel([train.dim, train.num_classes], wbr.SeededRng(0))
    return wbr.run_continual(model, sc, train, test, cfg)


def test_emitted_split_cardinalities():
    train, test = _load_features()
    assert train.n_samples == 50000 and train.dim == 768
    assert test.n_samples == 10000 and test.dim == 768
    assert np.array_equal(np.bincount(train.labels, minlength=100), np.full(100, 500))
    assert np.array_equal(np.bincount(test.labels, minlength=100), np.full(100, 100))


def test_prototype_baseline_hits_published_band():
    train, test = _load_features()
    sc = wbr.build_scenario(train, test, base_size=5, increment=5)
    record = wbr.simplecil_run(sc, train, test)
    assert abs(record.final_accuracy - 64.41) <= 2.0, record.final_accuracy
    assert abs(record.mean_accuracy - 76.1) <= 2.0, record.mean_accuracy


def test_balanced_replay_beats_prototypes():
    train, test = _load_features()
    sc = wbr.build_scenario(train, test, base_size=5, increment=5)
    proto = wbr.simplecil_run(sc, train, test)
    run = _balanced_run()
    assert run.final_accuracy - proto.final_accuracy >= 2.0
    assert run.mean_accuracy - proto.mean_accuracy >= 1.0


def test_momentum_wrecks_the_balance():
    base = _balanced_run()
    mom = _balanced_run(momentum=0.9)
    assert base.final_accuracy - mom.final_accuracy >= 20.0


def _weights_cached():
    import torch
    from torchvision.models import ViT_B_16_Weights

    fname = ViT_B_16_Weights.IMAGENET1K_V1.url.split("/")[-1]
    return (Path(torch.hub.get_dir()) / "checkpoints" / fname).exists()


def test_real_backbone_smoke():
    if not _weights_cached():
        pytest.skip("backbone weights not in the torch hub cache; run once online first")
    images, _ = stub_images(num_classes=2, per_class=2)
    enc = build_encoder()
    x = preprocess(images, "unit-range")
    a = enc(x).detach().cpu().numpy()
    b = enc(x).detach().cpu().numpy()
    assert a.shape == (4, 768)
    assert np.array_equal(a, b)  # frozen eval mode, no dropout
