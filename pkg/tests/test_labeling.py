import numpy as np
import pytest

from domforest.labeling import label_ids, mean_shift


def test_identical_actions_one_cluster():
    pts = np.tile(np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]), (7, 1))
    labels, modes = mean_shift(pts, bandwidth=0.05)
    assert len(modes) == 1
    assert all(l.cluster == 0 for l in labels)
    assert np.allclose(modes[0], pts[0])


def test_single_action_mode_is_exact():
    pts = np.array([[0.3, -0.1, 0.2, 0.0, 0.05, 0.4]])
    labels, modes = mean_shift(pts, bandwidth=0.02)
    assert len(modes) == 1
    assert np.array_equal(modes[0], pts[0])
    assert labels[0].cluster == 0


def test_two_separated_groups():
    rng = np.random.default_rng(0)
    bw = 0.05
    a = np.zeros(6) + rng.uniform(-bw / 10, bw / 10, (20, 6))
    b = np.full(6, 10 * bw) + rng.uniform(-bw / 10, bw / 10, (15, 6))
    pts = np.vstack([a, b])
    labels, modes = mean_shift(pts, bandwidth=bw)
    assert len(modes) == 2
    ids = np.array([l.cluster for l in labels])
    assert len(set(ids[:20])) == 1 and len(set(ids[20:])) == 1
    assert ids[0] != ids[20]
    got = {tuple(np.round(m, 9)) for m in modes}
    want = {tuple(np.round(a.mean(axis=0), 9)), tuple(np.round(b.mean(axis=0), 9))}
    for m, target in [(modes[ids[0]], a.mean(axis=0)), (modes[ids[20]], b.mean(axis=0))]:
        assert np.max(np.abs(m - target)) < 1e-6


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    centers = rng.uniform(-0.3, 0.3, (4, 6))
    pts = np.vstack([c + rng.normal(0, 0.002, (12, 6)) for c in centers])
    base = label_ids(pts, bandwidth=0.03)
    perm = rng.permutation(len(pts))
    shuffled = label_ids(pts[perm], bandwidth=0.03)
    # same partition (ids are assigned canonically, so they match exactly)
    assert np.array_equal(base[perm], shuffled)


def test_assigned_mode_is_fixed_point():
    rng = np.random.default_rng(2)
    centers = rng.uniform(-0.3, 0.3, (5, 6))
    pts = np.vstack([c + rng.normal(0, 0.004, (20, 6)) for c in centers])
    bw = 0.05
    labels, modes = mean_shift(pts, bw)
    assert len(modes) == 5
    for mode in modes:
        d = np.linalg.norm(pts - mode, axis=1)
        neigh = pts[d <= bw]
        shift = np.linalg.norm(neigh.mean(axis=0) - mode)
        assert shift < 1e-6


def test_cluster_count_monotone_in_bandwidth():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.5, 0.5, (120, 6))
    counts = []
    for bw in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6]:
        _, modes = mean_shift(pts, bw)
        counts.append(len(modes))
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] == 1


def test_validation():
    with pytest.raises(ValueError):
        mean_shift(np.zeros((0, 6)), 0.1)
    with pytest.raises(ValueError):
        mean_shift(np.zeros((3, 6)), 0.0)
