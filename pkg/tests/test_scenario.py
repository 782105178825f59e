import numpy as np
import pytest

from helpers import make_blobs
from wbr.errors import ConfigError, ConsistencyError
from wbr.scenario import build_scenario


def test_partition_properties_across_shapes_and_seeds():
    train, test = make_blobs(num_classes=10, n_train=8, n_test=4)
    for base, inc in [(0, 1), (0, 3), (2, 2), (4, 3), (5, 5), (0, 10)]:
        for seed in (None, 0, 1, 7):
            sc = build_scenario(train, test, base, inc, class_order_seed=seed)
            chunks = [t.class_ids for t in sc.tasks]
            flat = [c for chunk in chunks for c in chunk]
            # every class exactly once, tasks disjoint
            assert sorted(flat) == list(range(10))
            assert len(flat) == len(set(flat))
            # chunk sizes: base first, then increments, remainder last
            if base > 0:
                assert len(chunks[0]) == base
                rest = chunks[1:]
            else:
                rest = chunks
            assert all(len(c) == inc for c in rest[:-1])
            assert 1 <= len(rest[-1]) <= inc
            # precomputed rows point at exactly the task's labels
            for task in sc.tasks:
                assert set(train.labels[task.train_rows]) == set(task.class_ids)
                assert set(test.labels[task.test_rows]) == set(task.class_ids)
                outside = np.setdiff1d(np.flatnonzero(np.isin(train.labels, task.class_ids)),
                                       task.train_rows)
                assert outside.size == 0


def test_default_order_is_ascending():
    train, test = make_blobs(num_classes=6)
    sc = build_scenario(train, test, 2, 2)
    assert sc.class_order == (0, 1, 2, 3, 4, 5)
    assert [t.class_ids for t in sc.tasks] == [(0, 1), (2, 3), (4, 5)]


def test_seeded_order_deterministic_and_seed_sensitive():
    train, test = make_blobs(num_classes=8)
    a = build_scenario(train, test, 0, 2, class_order_seed=3)
    b = build_scenario(train, test, 0, 2, class_order_seed=3)
    c = build_scenario(train, test, 0, 2, class_order_seed=4)
    assert a.class_order == b.class_order
    assert a.class_order != c.class_order


def test_seen_classes_accumulates():
    train, test = make_blobs(num_classes=6)
    sc = build_scenario(train, test, 2, 2)
    assert sc.seen_classes(0) == {0, 1}
    assert sc.seen_classes(1) == {0, 1, 2, 3}
    assert sc.seen_classes(2) == {0, 1, 2, 3, 4, 5}
    with pytest.raises(IndexError):
        sc.seen_classes(3)


def test_config_validation():
    train, test = make_blobs(num_classes=6)
    with pytest.raises(ConfigError, match="scenario.increment"):
        build_scenario(train, test, 2, 0)
    with pytest.raises(ConfigError, match="scenario.base_size"):
        build_scenario(train, test, -1, 2)
    with pytest.raises(ConfigError, match="exceeds"):
        build_scenario(train, test, 5, 2)


def test_class_count_mismatch():
    train, _ = make_blobs(num_classes=6)
    _, test = make_blobs(num_classes=5)
    with pytest.raises(ConsistencyError):
        build_scenario(train, test, 2, 2)


def test_fingerprint_identifies_schedule():
    train, test = make_blobs(num_classes=6)
    a = build_scenario(train, test, 2, 2)
    b = build_scenario(train, test, 2, 2)
    c = build_scenario(train, test, 0, 2)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert a.fingerprint()["class_order"] == [0, 1, 2, 3, 4, 5]
