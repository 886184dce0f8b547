import numpy as np
import pytest

from domforest import baselines
from domforest.baselines import (LinearModel, MlpModel, fit_linear, fit_mlp,
                                 init_mlp, load_linear, load_mlp, mlp_gradients,
                                 mlp_loss, predict_baseline, save_linear, save_mlp)
from domforest.data import Dataset


def dataset_from(X, Y):
    ds = Dataset(np.zeros((0, X.shape[1])), np.zeros((0, 6)),
                 np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    ds.features = np.asarray(X, dtype=np.float64)
    ds.actions = np.asarray(Y, dtype=np.float64)
    ds.task_ids = np.zeros(len(X), dtype=np.int64)
    ds.iterations = np.zeros(len(X), dtype=np.int64)
    return ds


def linear_toy(n=200, d=20, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, d))
    W = rng.uniform(-0.5, 0.5, (6, d))
    b = rng.uniform(-0.2, 0.2, 6)
    Y = X @ W.T + b
    return X, Y, W, b


def test_linear_recovers_exact_map():
    X, Y, W, b = linear_toy()
    model = fit_linear(dataset_from(X, Y))
    assert np.max(np.abs(model.weight - W)) < 1e-8
    assert np.max(np.abs(model.bias - b)) < 1e-8


def test_linear_single_sample_interpolates():
    X = np.array([[0.3, -0.2, 0.5]])
    Y = np.array([[1, 2, 3, 4, 5, 6.0]])
    model = fit_linear(dataset_from(X, Y))
    assert np.allclose(model.predict(X[0]), Y[0], atol=1e-9)


def test_linear_duplicated_columns_match_pinv_oracle():
    X, Y, _, _ = linear_toy(n=50, d=8, seed=3)
    Xdup = np.hstack([X, X[:, :3]])   # rank-deficient by construction
    model = fit_linear(dataset_from(Xdup, Y))
    # oracle: explicit pseudo-inverse of the augmented system
    A = np.hstack([Xdup, np.ones((50, 1))])
    W = np.linalg.pinv(A) @ Y
    oracle_pred = A @ W
    assert np.allclose(model.predict_batch(Xdup), oracle_pred, atol=1e-8)


def test_linear_zero_feature_returns_bias():
    X, Y, _, _ = linear_toy(n=40, d=6, seed=4)
    model = fit_linear(dataset_from(X, Y))
    assert np.allclose(predict_baseline(model, np.zeros(6)), model.bias)


def test_linear_is_affine():
    X, Y, _, _ = linear_toy(n=40, d=6, seed=5)
    model = fit_linear(dataset_from(X, Y))
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)
    lhs = model.predict(a + b)
    rhs = model.predict(a) + model.predict(b) - model.bias
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    X = rng.uniform(-1, 1, (5, 12))
    Y = rng.uniform(-1, 1, (5, 6))
    model = init_mlp(12, seed=1)
    dw1, db1, dw2, db2 = mlp_gradients(model, X, Y)
    eps = 1e-6

    def fd(param, analytic):
        worst = 0.0
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + eps
            lp = mlp_loss(model, X, Y)
            param[idx] = orig - eps
            lm = mlp_loss(model, X, Y)
            param[idx] = orig
            num = (lp - lm) / (2 * eps)
            denom = max(abs(num), abs(analytic[idx]), 1e-8)
            worst = max(worst, abs(num - analytic[idx]) / denom)
        return worst

    # spot-check a subsample of w1 (it is large), all of the rest
    sub = (slice(0, 3), slice(0, 8))
    assert fd(model.w1[sub], dw1[sub]) < 1e-4
    assert fd(model.b1, db1) < 1e-4
    assert fd(model.w2, dw2) < 1e-4
    assert fd(model.b2, db2) < 1e-4


def test_mlp_zero_epochs_is_initialization():
    X, Y, _, _ = linear_toy(n=30, d=10, seed=8)
    ds = dataset_from(X, Y)
    trained = fit_mlp(ds, epochs=0, seed=3)
    fresh = init_mlp(10, seed=3)
    assert np.array_equal(trained.w1, fresh.w1)
    assert np.array_equal(trained.w2, fresh.w2)
    assert np.allclose(trained.predict_batch(X), fresh.predict_batch(X))


def test_mlp_loss_decreases_with_training():
    X, Y, _, _ = linear_toy(n=60, d=10, seed=9)
    ds = dataset_from(X, Y)
    before = mlp_loss(fit_mlp(ds, epochs=0, seed=4), X, Y)
    after = mlp_loss(fit_mlp(ds, epochs=200, lr=1e-2, seed=4), X, Y)
    assert after < before


def test_mlp_deterministic_under_seed():
    X, Y, _, _ = linear_toy(n=40, d=8, seed=10)
    ds = dataset_from(X, Y)
    a = fit_mlp(ds, epochs=20, seed=11)
    b = fit_mlp(ds, epochs=20, seed=11)
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)
    c = fit_mlp(ds, epochs=20, seed=12)
    assert not np.array_equal(a.w1, c.w1)


def test_mlp_divergence_reports_lr():
    X, Y, _, _ = linear_toy(n=40, d=8, seed=13)
    ds = dataset_from(np.asarray(X) * 100, np.asarray(Y) * 100)
    with pytest.raises(FloatingPointError, match="lr="):
        fit_mlp(ds, epochs=200, lr=1e6, seed=1)


def test_mlp_forward_matches_matrix_oracle():
    rng = np.random.default_rng(14)
    model = init_mlp(10, seed=5)
    x = rng.uniform(-1, 1, 10)
    # independent recomputation with plain matrix arithmetic
    h = np.maximum(x @ model.w1 + model.b1, 0.0)
    want = h @ model.w2 + model.b2
    assert np.allclose(predict_baseline(model, x), want, atol=1e-12)


def test_model_serialization_roundtrip(tmp_path):
    X, Y, _, _ = linear_toy(n=30, d=9, seed=15)
    lin = fit_linear(dataset_from(X, Y))
    save_linear(lin, tmp_path / "m.linm")
    back = load_linear(tmp_path / "m.linm")
    assert np.array_equal(back.weight, lin.weight)
    assert np.array_equal(back.bias, lin.bias)
    assert (tmp_path / "m.linm").read_bytes()[:4] == b"LINM"

    mlp = fit_mlp(dataset_from(X, Y), epochs=3, seed=6)
    save_mlp(mlp, tmp_path / "m.mlpm")
    back = load_mlp(tmp_path / "m.mlpm")
    rng = np.random.default_rng(0)
    probe = rng.uniform(-1, 1, 9)
    assert np.array_equal(back.predict(probe), mlp.predict(probe))
    assert (tmp_path / "m.mlpm").read_bytes()[:4] == b"MLPM"


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        fit_linear(Dataset())
    with pytest.raises(ValueError):
        fit_mlp(Dataset())
