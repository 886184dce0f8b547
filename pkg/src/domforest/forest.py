"""Random-forest controller trained on Shannon information gain.

Trees are grown top-down: at every node a batch of random (feature,
threshold) candidates is scored by the entropy reduction of the discrete
action labels and the best one is kept.  Leaves store the mean expert
action per task; the forest prediction is the average of the K leaf
actions reached by a feature vector.
"""

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels

_MAGIC = b"RFCL"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 25
    max_depth: int = 16
    min_gain: float = 1e-4            # bits
    candidate_splits: int = 64
    subsample: float = 0.7            # per-tree fraction, without replacement
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("need at least one tree")
        if self.min_gain < 0:
            raise ValueError("min_gain must be >= 0")
        if not (0.0 < self.subsample <= 1.0):
            raise ValueError("subsample fraction must be in (0, 1]")


class SplitNode:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature, threshold, left, right):
        self.feature = int(feature)
        self.threshold = float(threshold)
        self.left = left
        self.right = right


class LeafNode:
    __slots__ = ("task_actions", "task_counts", "label_hist")

    def __init__(self, task_actions, task_counts, label_hist):
        self.task_actions = task_actions    # {task id: mean 6-vector}
        self.task_counts = task_counts      # {task id: sample count}
        self.label_hist = label_hist        # {label id: count}

    def all_task_mean(self) -> np.ndarray:
        total = sum(self.task_counts.values())
        acc = np.zeros(6)
        for t, a in self.task_actions.items():
            acc += a * self.task_counts[t]
        return acc / total


def entropy_bits(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a histogram of non-negative counts."""
    n = counts.sum()
    if n == 0:
        return 0.0
    nz = counts[counts > 0].astype(np.float64)
    return float(np.log2(n) - np.sum(nz * np.log2(nz)) / n)


def info_gain(parent_labels, partition) -> float:
    """Entropy reduction of splitting `parent_labels` into two child multisets."""
    left, right = partition
    parent = np.asarray(sorted(parent_labels))
    if parent.size == 0:
        raise ValueError("empty parent")
    both = np.asarray(sorted(list(left) + list(right)))
    if both.shape != parent.shape or not np.array_equal(parent, both):
        raise ValueError("partition does not cover the parent labels exactly")
    ids, inv = np.unique(parent, return_inverse=True)

    def hist(values):
        h = np.zeros(ids.size, dtype=np.int64)
        for v in values:
            h[np.searchsorted(ids, v)] += 1
        return h

    hl, hr = hist(left), hist(right)
    n = parent.size
    return (entropy_bits(hl + hr)
            - (hl.sum() / n) * entropy_bits(hl)
            - (hr.sum() / n) * entropy_bits(hr))


def _gains_from_hists(left_hists, left_counts, parent_hist):
    """Vectorized per-candidate gain from integer left-child histograms."""
    n = parent_hist.sum()
    right_hists = parent_hist[None, :] - left_hists
    right_counts = n - left_counts

    def h_rows(hists, counts):
        safe = np.where(hists > 0, hists, 1).astype(np.float64)
        s = np.sum(hists * np.log2(safe), axis=1)
        cnt = counts.astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(counts > 0, np.log2(np.where(counts > 0, cnt, 1.0)) - s / np.where(counts > 0, cnt, 1.0), 0.0)
        return out

    hp = entropy_bits(parent_hist)
    hl = h_rows(left_hists, left_counts)
    hr = h_rows(right_hists, right_counts)
    gains = hp - (left_counts / n) * hl - (right_counts / n) * hr
    invalid = (left_counts == 0) | (right_counts == 0)
    gains[invalid] = -np.inf
    return gains


class DecisionTree:
    """One tree: an object graph plus flattened arrays for batch routing."""

    def __init__(self, root, n_features: int):
        self.root = root
        self.n_features = n_features
        self._flat = None

    def leaf_count(self) -> int:
        def count(node):
            if isinstance(node, LeafNode):
                return 1
            return count(node.left) + count(node.right)

        return count(self.root)

    def route(self, f: np.ndarray) -> LeafNode:
        node = self.root
        while isinstance(node, SplitNode):
            node = node.left if f[node.feature] < node.threshold else node.right
        return node

    def flatten(self):
        """Preorder arrays (feat, thr, left, right, leaves) for the kernels."""
        if self._flat is not None:
            return self._flat
        feat, thr, left, right, leaves = [], [], [], [], []

        def walk(node):
            idx = len(feat)
            if isinstance(node, LeafNode):
                feat.append(-1)
                thr.append(0.0)
                left.append(-1)
                right.append(-1)
                leaves.append(node)
                return idx
            feat.append(node.feature)
            thr.append(node.threshold)
            left.append(0)
            right.append(0)
            leaves.append(None)
            li = walk(node.left)
            ri = walk(node.right)
            left[idx] = li
            right[idx] = ri
            return idx

        walk(self.root)
        self._flat = (np.array(feat, dtype=np.int64),
                      np.array(thr, dtype=np.float64),
                      np.array(left, dtype=np.int64),
                      np.array(right, dtype=np.int64),
                      leaves)
        return self._flat

    def route_batch(self, X: np.ndarray) -> list:
        feat, thr, left, right, leaves = self.flatten()
        ids = kernels.route_rows(np.ascontiguousarray(X, dtype=np.float64),
                                 feat, thr, left, right)
        return [leaves[i] for i in ids]


@dataclass
class RandomForest:
    trees: list
    config: TrainConfig
    n_features: int
    task_ids: tuple

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def train_tree(X, actions, labels, tasks, cfg: TrainConfig, seed: int) -> DecisionTree:
    """Grow one tree on the given rows (top-down, greedy max-gain splits).

    Each node draws its split candidates from an rng keyed on (seed, node
    path), so loosening the stopping rule only adds nodes below former
    leaves and never perturbs the rest of the tree.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    tasks = np.asarray(tasks, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    n_labels = int(labels.max()) + 1 if labels.size else 1

    def make_leaf(rows):
        task_actions, task_counts, hist = {}, {}, {}
        for t in np.unique(tasks[rows]):
            sel = rows[tasks[rows] == t]
            task_actions[int(t)] = actions[sel].mean(axis=0)
            task_counts[int(t)] = int(sel.size)
        vals, cnts = np.unique(labels[rows], return_counts=True)
        for v, c in zip(vals, cnts):
            hist[int(v)] = int(c)
        return LeafNode(task_actions, task_counts, hist)

    def grow(rows, depth, path):
        node_labels = labels[rows]
        parent_hist = np.bincount(node_labels, minlength=n_labels)
        pure = (parent_hist > 0).sum() <= 1
        if depth >= cfg.max_depth or pure or rows.size < 2:
            return make_leaf(rows)

        rng = np.random.default_rng(np.random.SeedSequence((seed, path)))
        feats = rng.integers(0, X.shape[1], size=cfg.candidate_splits)
        sub = X[rows[:, None], feats[None, :]]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        thrs = rng.uniform(lo, hi)
        left_h, left_c = kernels.split_histograms(
            X, rows, node_labels, feats.astype(np.int64), thrs, n_labels)
        gains = _gains_from_hists(left_h, left_c, parent_hist)
        best = int(np.argmax(gains))    # first-sampled candidate wins ties
        if not np.isfinite(gains[best]) or gains[best] < cfg.min_gain:
            return make_leaf(rows)
        go_left = X[rows, feats[best]] < thrs[best]
        lrows = rows[go_left]
        rrows = rows[~go_left]
        if lrows.size == 0 or rrows.size == 0:
            return make_leaf(rows)
        return SplitNode(feats[best], thrs[best],
                         grow(lrows, depth + 1, 2 * path),
                         grow(rrows, depth + 1, 2 * path + 1))

    root = grow(np.arange(X.shape[0], dtype=np.int64), 0, 1)
    return DecisionTree(root, X.shape[1])


def train_forest(X, actions, labels, tasks, cfg: TrainConfig) -> RandomForest:
    """K trees, each on an independent uniform subsample without replacement."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    tasks = np.asarray(tasks, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty training data")
    words = np.random.SeedSequence(cfg.seed).generate_state(2 * cfg.n_trees, dtype=np.uint64)
    trees = []
    m = max(1, int(round(cfg.subsample * n)))
    for k in range(cfg.n_trees):
        sub_rng = np.random.default_rng(int(words[2 * k]))
        rows = np.sort(sub_rng.choice(n, size=m, replace=False))
        trees.append(train_tree(X[rows], actions[rows], labels[rows],
                                tasks[rows], cfg, int(words[2 * k + 1])))
    return RandomForest(trees, cfg, X.shape[1], tuple(sorted(np.unique(tasks).tolist())))


def predict(forest: RandomForest, f: np.ndarray, task: int):
    """Average of the K reached leaf actions for the task (degraded count too).

    A reached leaf that never saw the task falls back to its all-task mean
    and increments the degraded counter.
    """
    f = np.asarray(f, dtype=np.float64)
    acc = np.zeros(6)
    degraded = 0
    for tree in forest.trees:
        leaf = tree.route(f)
        if task in leaf.task_actions:
            acc += leaf.task_actions[task]
        else:
            acc += leaf.all_task_mean()
            degraded += 1
    return acc / forest.n_trees, degraded


def predict_action(forest: RandomForest, f: np.ndarray, task: int) -> np.ndarray:
    return predict(forest, f, task)[0]


def predict_batch(forest: RandomForest, X: np.ndarray, task: int):
    """Vectorized prediction for many feature rows; returns (n,6) and count."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    acc = np.zeros((X.shape[0], 6))
    degraded = 0
    for tree in forest.trees:
        feat, thr, left, right, leaves = tree.flatten()
        actions = np.empty((len(leaves), 6))
        missing = np.zeros(len(leaves), dtype=bool)
        for i, leaf in enumerate(leaves):
            if leaf is None:
                continue
            if task in leaf.task_actions:
                actions[i] = leaf.task_actions[task]
            else:
                actions[i] = leaf.all_task_mean()
                missing[i] = True
        ids = kernels.route_rows(X, feat, thr, left, right)
        acc += actions[ids]
        degraded += int(missing[ids].sum())
    return acc / forest.n_trees, degraded


def leaf_counts(forest: RandomForest) -> list:
    return [t.leaf_count() for t in forest.trees]


# ---------------------------------------------------------------------------
# serialization: versioned binary (magic RFCL) and a text dump for inspection

def _write_node(buf, node):
    if isinstance(node, SplitNode):
        buf.write(struct.pack("<BId", 0, node.feature, node.threshold))
        _write_node(buf, node.left)
        _write_node(buf, node.right)
        return
    buf.write(struct.pack("<BI", 1, len(node.task_actions)))
    for t in sorted(node.task_actions):
        buf.write(struct.pack("<II", t, node.task_counts[t]))
        buf.write(struct.pack("<6d", *node.task_actions[t]))
    buf.write(struct.pack("<I", len(node.label_hist)))
    for lab in sorted(node.label_hist):
        buf.write(struct.pack("<II", lab, node.label_hist[lab]))


def _read_node(buf):
    kind = struct.unpack("<B", buf.read(1))[0]
    if kind == 0:
        feature, threshold = struct.unpack("<Id", buf.read(12))
        left = _read_node(buf)
        right = _read_node(buf)
        return SplitNode(feature, threshold, left, right)
    (n_tasks,) = struct.unpack("<I", buf.read(4))
    task_actions, task_counts = {}, {}
    for _ in range(n_tasks):
        t, cnt = struct.unpack("<II", buf.read(8))
        task_actions[t] = np.array(struct.unpack("<6d", buf.read(48)))
        task_counts[t] = cnt
    (n_labels,) = struct.unpack("<I", buf.read(4))
    hist = {}
    for _ in range(n_labels):
        lab, cnt = struct.unpack("<II", buf.read(8))
        hist[lab] = cnt
    return LeafNode(task_actions, task_counts, hist)


def to_bytes(forest: RandomForest) -> bytes:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<III", _FORMAT_VERSION, forest.n_trees, forest.n_features))
    buf.write(struct.pack("<I", len(forest.task_ids)))
    for t in forest.task_ids:
        buf.write(struct.pack("<I", t))
    for tree in forest.trees:
        _write_node(buf, tree.root)
    return buf.getvalue()


def from_bytes(data: bytes) -> RandomForest:
    buf = io.BytesIO(data)
    if buf.read(4) != _MAGIC:
        raise ValueError("not a forest file: bad magic")
    version, k, n_features = struct.unpack("<III", buf.read(12))
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {version}")
    (n_tasks,) = struct.unpack("<I", buf.read(4))
    task_ids = tuple(struct.unpack("<I", buf.read(4))[0] for _ in range(n_tasks))
    trees = [DecisionTree(_read_node(buf), n_features) for _ in range(k)]
    return RandomForest(trees, TrainConfig(n_trees=k), n_features, task_ids)


def save(forest: RandomForest, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(forest))


def load(path) -> RandomForest:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def dump_text(forest: RandomForest) -> str:
    """Human-readable rendering of every tree."""
    lines = [f"forest: {forest.n_trees} trees, {forest.n_features} features, "
             f"tasks {list(forest.task_ids)}"]

    def walk(node, indent):
        pad = "  " * indent
        if isinstance(node, SplitNode):
            lines.append(f"{pad}if f[{node.feature}] < {node.threshold:.6g}:")
            walk(node.left, indent + 1)
            lines.append(f"{pad}else:")
            walk(node.right, indent + 1)
        else:
            acts = ", ".join(
                f"task {t}: n={node.task_counts[t]} a=[" +
                " ".join(f"{v:.4g}" for v in node.task_actions[t]) + "]"
                for t in sorted(node.task_actions))
            lines.append(f"{pad}leaf {acts}")

    for i, tree in enumerate(forest.trees):
        lines.append(f"tree {i} ({tree.leaf_count()} leaves):")
        walk(tree.root, 1)
    return "\n".join(lines)
