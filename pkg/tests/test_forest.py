import math
from dataclasses import replace

import numpy as np
import pytest

from domforest import forest
from domforest.forest import (LeafNode, RandomForest, SplitNode, TrainConfig,
                              from_bytes, info_gain, leaf_counts, predict,
                              predict_action, predict_batch, to_bytes,
                              train_forest, train_tree)

# ---------------------------------------------------------------- info gain


def entropy_oracle(labels):
    """Independent entropy arithmetic, straight from the definition."""
    labels = list(labels)
    n = len(labels)
    h = 0.0
    for v in set(labels):
        p = labels.count(v) / n
        h -= p * math.log2(p)
    return h


def gain_oracle(parent, left, right):
    n = len(parent)
    return (entropy_oracle(parent)
            - len(left) / n * entropy_oracle(left)
            - len(right) / n * entropy_oracle(right))


def test_perfect_split_is_one_bit():
    assert info_gain(["A", "A", "B", "B"], (["A", "A"], ["B", "B"])) == 1.0


def test_useless_split_is_zero():
    gain = info_gain(["A", "A", "B", "B"], (["A", "B"], ["A", "B"]))
    assert gain == pytest.approx(0.0, abs=1e-15)


def test_three_one_split_value():
    gain = info_gain(["A", "A", "A", "B"], (["A", "A"], ["A", "B"]))
    expected = (-(3 / 4) * math.log2(3 / 4) - (1 / 4) * math.log2(1 / 4)) - 0.5 * 1.0
    assert gain == pytest.approx(expected, abs=1e-12)
    assert gain == pytest.approx(0.3112781, abs=1e-7)


def test_info_gain_against_oracle_random_multisets():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        labels = [int(v) for v in rng.integers(0, 5, n)]
        k = int(rng.integers(1, n))
        left, right = labels[:k], labels[k:]
        assert info_gain(labels, (left, right)) == pytest.approx(
            gain_oracle(labels, left, right), abs=1e-12)


def test_info_gain_validation():
    with pytest.raises(ValueError):
        info_gain([], ([], []))
    with pytest.raises(ValueError):
        info_gain(["A", "B"], (["A"], ["A"]))


# ---------------------------------------------------------------- training


def toy_separable(n_per=20, seed=0, d=10):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, 0.1, (n_per, d))
    x1 = rng.uniform(0.9, 1.0, (n_per, d))
    X = np.vstack([x0, x1])
    labels = np.array([0] * n_per + [1] * n_per)
    actions = np.zeros((2 * n_per, 6))
    actions[n_per:, 0] = 0.6
    tasks = np.zeros(2 * n_per, dtype=np.int64)
    return X, actions, labels, tasks


def test_single_sample_tree_is_leaf():
    X = np.array([[0.5, 0.2]])
    actions = np.array([[1, 2, 3, 4, 5, 6.0]])
    tree = train_tree(X, actions, np.array([0]), np.array([0]), TrainConfig(), seed=1)
    assert isinstance(tree.root, LeafNode)
    assert np.allclose(tree.root.task_actions[0], actions[0])


def test_pure_dataset_single_leaf():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, (30, 8))
    actions = rng.uniform(-1, 1, (30, 6))
    labels = np.zeros(30, dtype=np.int64)
    tree = train_tree(X, actions, labels, np.zeros(30, dtype=np.int64),
                      TrainConfig(), seed=2)
    assert isinstance(tree.root, LeafNode)
    assert np.allclose(tree.root.task_actions[0], actions.mean(axis=0), atol=1e-12)


def test_separable_data_splits_at_root():
    X, actions, labels, tasks = toy_separable()
    tree = train_tree(X, actions, labels, tasks, TrainConfig(max_depth=8), seed=3)
    root = tree.root
    assert isinstance(root, SplitNode)
    # exhaustive-oracle: any threshold inside the gap attains the 1-bit max,
    # so the chosen split must land there and the children must be leaves
    assert 0.1 < root.threshold < 0.9
    assert isinstance(root.left, LeafNode) and isinstance(root.right, LeafNode)
    assert tree.leaf_count() == 2


def test_forest_single_tree_full_subsample_equals_tree():
    X, actions, labels, tasks = toy_separable(seed=5)
    cfg = TrainConfig(n_trees=1, subsample=1.0, seed=11)
    f = train_forest(X, actions, labels, tasks, cfg)
    rng = np.random.default_rng(0)
    for _ in range(20):
        probe = rng.uniform(0, 1, X.shape[1])
        leaf = f.trees[0].route(probe)
        assert np.array_equal(predict_action(f, probe, 0), leaf.task_actions[0])


def test_forest_determinism_bytes_equal():
    X, actions, labels, tasks = toy_separable(seed=6)
    cfg = TrainConfig(n_trees=5, seed=42)
    a = train_forest(X, actions, labels, tasks, cfg)
    b = train_forest(X, actions, labels, tasks, cfg)
    assert to_bytes(a) == to_bytes(b)
    c = train_forest(X, actions, labels, tasks, replace(cfg, seed=43))
    assert to_bytes(a) != to_bytes(c)


def test_forest_routes_training_points_to_pure_leaves():
    X, actions, labels, tasks = toy_separable(n_per=30, seed=7)
    cfg = TrainConfig(n_trees=25, seed=1)
    f = train_forest(X, actions, labels, tasks, cfg)
    # brute-force routing per tree: the reached leaf must be label-pure
    for tree in f.trees:
        for i in range(X.shape[0]):
            node = tree.root
            while isinstance(node, SplitNode):
                node = node.left if X[i, node.feature] < node.threshold else node.right
            assert len(node.label_hist) == 1


# ---------------------------------------------------------------- predict


def leaf(action6, task=0, count=1):
    return LeafNode({task: np.asarray(action6, dtype=float)}, {task: count},
                    {0: count})


def test_prediction_averages_two_leaves():
    t1 = forest.DecisionTree(leaf([0, 0, 0, 0, 0, 0]), 4)
    t2 = forest.DecisionTree(leaf([0.6, 0, 0, 0, 0, 0]), 4)
    f = RandomForest([t1, t2], TrainConfig(n_trees=2), 4, (0,))
    pred, degraded = predict(f, np.zeros(4), 0)
    assert np.allclose(pred, [0.3, 0, 0, 0, 0, 0])
    assert degraded == 0


def test_single_tree_prediction_is_leaf_action():
    t = forest.DecisionTree(leaf([1, 2, 3, 4, 5, 6]), 4)
    f = RandomForest([t], TrainConfig(n_trees=1), 4, (0,))
    assert np.array_equal(predict_action(f, np.zeros(4), 0), [1, 2, 3, 4, 5, 6])


def brute_force_predict(f, x, task):
    """Independent routing: explicit comparisons, then plain averaging."""
    acc = np.zeros(6)
    for tree in f.trees:
        node = tree.root
        while isinstance(node, SplitNode):
            if x[node.feature] < node.threshold:
                node = node.left
            else:
                node = node.right
        if task in node.task_actions:
            acc += node.task_actions[task]
        else:
            total = sum(node.task_counts.values())
            mean = sum(node.task_actions[t] * node.task_counts[t]
                       for t in node.task_actions) / total
            acc += mean
    return acc / len(f.trees)


def random_forest_for_probing(seed=0, n=300, d=16, n_tasks=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, d))
    actions = rng.uniform(-0.5, 0.5, (n, 6))
    labels = rng.integers(0, 6, n)
    tasks = rng.integers(0, n_tasks, n)
    return train_forest(X, actions, labels, tasks,
                        TrainConfig(n_trees=7, max_depth=6, seed=seed))


def test_predict_matches_brute_force_oracle():
    f = random_forest_for_probing()
    rng = np.random.default_rng(123)
    for _ in range(200):
        x = rng.uniform(-0.2, 1.2, 16)
        task = int(rng.integers(0, 2))
        got, _ = predict(f, x, task)
        want = brute_force_predict(f, x, task)
        assert np.max(np.abs(got - want)) <= 1e-12


def test_predict_batch_matches_scalar_predict():
    f = random_forest_for_probing(seed=9)
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 1, (50, 16))
    batch, deg_b = predict_batch(f, X, 1)
    deg_s = 0
    for i in range(50):
        single, d = predict(f, X[i], 1)
        deg_s += d
        assert np.array_equal(batch[i], single)
    assert deg_b == deg_s


def test_degraded_fallback_counts():
    # leaf that only knows task 0, queried with task 3
    t = forest.DecisionTree(leaf([1, 0, 0, 0, 0, 0], task=0), 4)
    f = RandomForest([t], TrainConfig(n_trees=1), 4, (0,))
    pred, degraded = predict(f, np.zeros(4), 3)
    assert degraded == 1
    assert np.array_equal(pred, [1, 0, 0, 0, 0, 0])


# ---------------------------------------------------------------- leaves


def count_leaves_oracle(node):
    if isinstance(node, LeafNode):
        return 1
    return count_leaves_oracle(node.left) + count_leaves_oracle(node.right)


def test_leaf_counts():
    single = forest.DecisionTree(leaf([0] * 6), 4)
    assert single.leaf_count() == 1
    depth1 = forest.DecisionTree(
        SplitNode(0, 0.5, leaf([0] * 6), leaf([1, 0, 0, 0, 0, 0])), 4)
    assert depth1.leaf_count() == 2
    f = random_forest_for_probing(seed=21)
    assert leaf_counts(f) == [count_leaves_oracle(t.root) for t in f.trees]


def test_monotone_refinement_with_min_gain():
    rng = np.random.default_rng(11)
    X = rng.uniform(0, 1, (200, 12))
    actions = rng.uniform(-0.5, 0.5, (200, 6))
    labels = rng.integers(0, 8, 200)
    tasks = np.zeros(200, dtype=np.int64)
    totals = []
    for min_gain in [1e-2, 1e-4, 0.0]:
        cfg = TrainConfig(n_trees=5, min_gain=min_gain, seed=3)
        f = train_forest(X, actions, labels, tasks, cfg)
        totals.append(sum(leaf_counts(f)))
    assert totals[0] <= totals[1] <= totals[2]


def test_training_set_consistency():
    # subsample 1.0, min gain 0, deep trees, constant action per label:
    # every training sample must be reproduced exactly
    rng = np.random.default_rng(13)
    X, actions, labels, tasks = toy_separable(n_per=25, seed=13)
    cfg = TrainConfig(n_trees=9, subsample=1.0, min_gain=0.0, max_depth=32, seed=5)
    f = train_forest(X, actions, labels, tasks, cfg)
    pred, _ = predict_batch(f, X, 0)
    assert np.max(np.abs(pred - actions)) <= 1e-12


# ---------------------------------------------------------------- serialization


def test_serialization_roundtrip():
    f = random_forest_for_probing(seed=31)
    blob = to_bytes(f)
    assert blob[:4] == b"RFCL"
    g = from_bytes(blob)
    assert g.n_trees == f.n_trees
    assert g.task_ids == f.task_ids
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = rng.uniform(0, 1, 16)
        task = int(rng.integers(0, 2))
        assert np.array_equal(predict_action(f, x, task),
                              predict_action(g, x, task))
    assert to_bytes(g) == blob


def test_save_load_file(tmp_path):
    f = random_forest_for_probing(seed=33)
    path = tmp_path / "model.rfcl"
    forest.save(f, path)
    g = forest.load(path)
    assert to_bytes(g) == to_bytes(f)


def test_bad_magic_rejected():
    with pytest.raises(ValueError):
        from_bytes(b"XXXX" + b"\x00" * 32)


def test_text_dump_mentions_every_tree():
    f = random_forest_for_probing(seed=35)
    text = forest.dump_text(f)
    for i in range(f.n_trees):
        assert f"tree {i}" in text
    assert "leaf" in text


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(n_trees=0)
    with pytest.raises(ValueError):
        TrainConfig(subsample=0.0)
    with pytest.raises(ValueError):
        TrainConfig(min_gain=-1.0)
