"""Baseline controllers: least-squares linear map and a one-hidden-layer MLP.

Both consume the same 768-dim features and emit 6-dim actions, for the
comparison experiments against the forest controller.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np

from .data import ACTION_DIM, Dataset
from .features import FEATURE_DIM

HIDDEN = 128
_LIN_MAGIC = b"LINM"
_MLP_MAGIC = b"MLPM"


@dataclass
class LinearModel:
    weight: np.ndarray    # (6, d)
    bias: np.ndarray      # (6,)

    def predict(self, f: np.ndarray) -> np.ndarray:
        return self.weight @ np.asarray(f, dtype=np.float64) + self.bias

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weight.T + self.bias


def fit_linear(ds: Dataset, ridge: float = 0.0) -> LinearModel:
    """Least squares with min-norm semantics; optional ridge damping."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    X = np.hstack([ds.features, np.ones((len(ds), 1))])
    if ridge > 0.0:
        d = X.shape[1]
        A = X.T @ X + ridge * np.eye(d)
        W = np.linalg.solve(A, X.T @ ds.actions)
    else:
        W, *_ = np.linalg.lstsq(X, ds.actions, rcond=None)
    return LinearModel(weight=W[:-1].T.copy(), bias=W[-1].copy())


@dataclass
class MlpModel:
    w1: np.ndarray    # (d, HIDDEN)
    b1: np.ndarray
    w2: np.ndarray    # (HIDDEN, 6)
    b2: np.ndarray

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        h = np.maximum(X @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def predict(self, f: np.ndarray) -> np.ndarray:
        return self.forward(f)[0]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)


def init_mlp(n_features: int = FEATURE_DIM, seed: int = 0) -> MlpModel:
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / n_features), (n_features, HIDDEN))
    w2 = rng.normal(0.0, np.sqrt(2.0 / HIDDEN), (HIDDEN, ACTION_DIM))
    return MlpModel(w1, np.zeros(HIDDEN), w2, np.zeros(ACTION_DIM))


def mlp_loss(model: MlpModel, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean squared error over all output entries."""
    diff = model.forward(X) - Y
    return float(np.mean(diff * diff))


def mlp_gradients(model: MlpModel, X: np.ndarray, Y: np.ndarray):
    """Analytic gradients of mlp_loss; returns (dw1, db1, dw2, db2)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = X.shape[0]
    pre = X @ model.w1 + model.b1
    h = np.maximum(pre, 0.0)
    out = h @ model.w2 + model.b2
    dout = 2.0 * (out - Y) / (n * Y.shape[1])
    dw2 = h.T @ dout
    db2 = dout.sum(axis=0)
    dh = dout @ model.w2.T
    dh[pre <= 0.0] = 0.0
    dw1 = X.T @ dh
    db1 = dh.sum(axis=0)
    return dw1, db1, dw2, db2


def fit_mlp(ds: Dataset, epochs: int = 500, lr: float = 1e-3,
            batch: int = 64, seed: int = 0) -> MlpModel:
    """Mini-batch gradient descent on MSE; deterministic given the seed."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    model = init_mlp(ds.features.shape[1], seed)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    n = len(ds)
    X, Y = ds.features, ds.actions
    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch):
            rows = order[lo : lo + batch]
            grads = mlp_gradients(model, X[rows], Y[rows])
            model.w1 -= lr * grads[0]
            model.b1 -= lr * grads[1]
            model.w2 -= lr * grads[2]
            model.b2 -= lr * grads[3]
        if not np.isfinite(mlp_loss(model, X[order[:batch]], Y[order[:batch]])):
            raise FloatingPointError(
                f"MLP training diverged (loss is not finite); lr={lr} is too high")
    return model


def predict_baseline(model, f: np.ndarray) -> np.ndarray:
    """Affine map or forward pass, depending on the model."""
    return model.predict(f)


# --- serialization (same framing style as the forest binary) --------------

def save_linear(model: LinearModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_LIN_MAGIC)
        fh.write(struct.pack("<III", 1, model.weight.shape[0], model.weight.shape[1]))
        fh.write(model.weight.astype("<f8").tobytes())
        fh.write(model.bias.astype("<f8").tobytes())


def load_linear(path) -> LinearModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _LIN_MAGIC:
            raise ValueError("not a linear model file")
        _, rows, cols = struct.unpack("<III", fh.read(12))
        w = np.frombuffer(fh.read(8 * rows * cols), dtype="<f8").reshape(rows, cols)
        b = np.frombuffer(fh.read(8 * rows), dtype="<f8")
    return LinearModel(w.copy(), b.copy())


def save_mlp(model: MlpModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MLP_MAGIC)
        d, h = model.w1.shape
        o = model.w2.shape[1]
        fh.write(struct.pack("<IIII", 1, d, h, o))
        for arr in (model.w1, model.b1, model.w2, model.b2):
            fh.write(arr.astype("<f8").tobytes())


def load_mlp(path) -> MlpModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _MLP_MAGIC:
            raise ValueError("not an MLP model file")
        _, d, h, o = struct.unpack("<IIII", fh.read(16))
        w1 = np.frombuffer(fh.read(8 * d * h), dtype="<f8").reshape(d, h).copy()
        b1 = np.frombuffer(fh.read(8 * h), dtype="<f8").copy()
        w2 = np.frombuffer(fh.read(8 * h * o), dtype="<f8").reshape(h, o).copy()
        b2 = np.frombuffer(fh.read(8 * o), dtype="<f8").copy()
    return MlpModel(w1, b1, w2, b2)
