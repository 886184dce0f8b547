"""Aggregated training data and its on-disk exchange format.

One row per sample: the 768-dim feature vector, the expert's 6-dim action,
the task id, and the imitation iteration that collected it.  The CSV
exchange format (shared by the trainer, the comparison command and any
external tooling) is: sample id, task id, 768 feature values, 6 action
values.
"""

from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_DIM

ACTION_DIM = 6


@dataclass
class Dataset:
    features: np.ndarray = field(
        default_factory=lambda: np.zeros((0, FEATURE_DIM)))
    actions: np.ndarray = field(default_factory=lambda: np.zeros((0, ACTION_DIM)))
    task_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.features.shape[0]

    def append(self, features, actions, task_ids, iteration: int) -> None:
        """Aggregate new rows; existing rows are never replaced."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if features.shape[1] != FEATURE_DIM:
            raise ValueError(f"features must be {FEATURE_DIM}-dimensional")
        if actions.shape[1] != ACTION_DIM:
            raise ValueError(f"actions must be {ACTION_DIM}-dimensional")
        n = features.shape[0]
        task_ids = np.broadcast_to(np.asarray(task_ids, dtype=np.int64), (n,))
        self.features = np.vstack([self.features, features])
        self.actions = np.vstack([self.actions, actions])
        self.task_ids = np.concatenate([self.task_ids, task_ids])
        self.iterations = np.concatenate(
            [self.iterations, np.full(n, iteration, dtype=np.int64)])

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows].copy(), self.actions[rows].copy(),
                       self.task_ids[rows].copy(), self.iterations[rows].copy())

    def task_rows(self, task_id: int) -> np.ndarray:
        return np.nonzero(self.task_ids == task_id)[0]


def save_dataset(ds: Dataset, path) -> None:
    """CSV: sample id, task id, 768 features, 6 actions; lossless floats."""
    with open(path, "w", encoding="utf-8") as fh:
        cols = (["sample_id", "task_id"]
                + [f"f{i}" for i in range(FEATURE_DIM)]
                + [f"a{i}" for i in range(ACTION_DIM)])
        fh.write(",".join(cols) + "\n")
        for i in range(len(ds)):
            parts = [str(i), str(int(ds.task_ids[i]))]
            parts += [repr(float(v)) for v in ds.features[i]]
            parts += [repr(float(v)) for v in ds.actions[i]]
            fh.write(",".join(parts) + "\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        expected = 2 + FEATURE_DIM + ACTION_DIM
        if len(header) != expected:
            raise ValueError(f"dataset file has {len(header)} columns, "
                             f"expected {expected}")
        raw = np.loadtxt(fh, delimiter=",", ndmin=2)
    if raw.size == 0:
        return Dataset()
    tasks = raw[:, 1].astype(np.int64)
    feats = raw[:, 2 : 2 + FEATURE_DIM]
    acts = raw[:, 2 + FEATURE_DIM :]
    return Dataset(feats, acts, tasks, np.zeros(len(tasks), dtype=np.int64))
