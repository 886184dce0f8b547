import numpy as np
import pytest

from domforest.expert import (HAND_SEPARATION_MAX, HumanMotionModel, TaskSpec,
                              clamp_separation, expert_action, human_step)

INIT_V2 = np.array([0.0, 0.35, 0.0])
INIT_V3 = np.array([0.3, 0.35, 0.0])
Z = np.array([0.0, 0.0, -1.0])


def oracle_straight(v2, v3, offset):
    """Independent evaluation: raw cross products, no shared code."""
    d = np.cross(Z, v3 - v2)
    d = d / np.linalg.norm(d)
    return np.concatenate([v2 + offset * d, v3 + offset * d])


def oracle_twist(v2, v3):
    c1 = np.cross(Z, v3 - v2)
    d1 = c1 / np.linalg.norm(c1)
    c2 = np.cross(v3 - v2, c1)
    d2 = c2 / np.linalg.norm(c2)
    mid = (v2 + v3) / 2
    return np.concatenate([mid + 0.31 * d1 + 0.15 * d2,
                           mid + 0.31 * d1 - 0.15 * d2])


def test_straight_anchoring_identity():
    a = expert_action(TaskSpec.by_name("straight"), INIT_V2, INIT_V3)
    assert np.max(np.abs(a[:3] - [0.0, 0.0, 0.0])) < 1e-9
    assert np.max(np.abs(a[3:] - [0.3, 0.0, 0.0])) < 1e-9


def test_bend_initial_hands():
    a = expert_action(TaskSpec.by_name("bend"), INIT_V2, INIT_V3)
    assert np.allclose(a[:3], [0.0, 0.175, 0.0], atol=1e-12)
    assert np.allclose(a[3:], [0.3, 0.175, 0.0], atol=1e-12)
    assert np.allclose(a, oracle_straight(INIT_V2, INIT_V3, 0.175), atol=1e-12)


def test_twist_initial_hands():
    a = expert_action(TaskSpec.by_name("twist"), INIT_V2, INIT_V3)
    assert np.allclose(a[:3], [0.15, 0.04, -0.15], atol=1e-12)
    assert np.allclose(a[3:], [0.15, 0.04, +0.15], atol=1e-12)
    assert np.allclose(a, oracle_twist(INIT_V2, INIT_V3), atol=1e-12)


def test_matches_oracles_on_random_hands():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v2 = rng.uniform(-0.3, 0.5, 3)
        v3 = v2 + rng.uniform(-0.25, 0.25, 3)
        if np.linalg.norm(np.cross(Z, v3 - v2)) < 1e-3:
            continue
        assert np.allclose(expert_action(TaskSpec.by_name("straight"), v2, v3),
                           oracle_straight(v2, v3, 0.35), atol=1e-12)
        assert np.allclose(expert_action(TaskSpec.by_name("bend"), v2, v3),
                           oracle_straight(v2, v3, 0.175), atol=1e-12)
        assert np.allclose(expert_action(TaskSpec.by_name("twist"), v2, v3),
                           oracle_twist(v2, v3), atol=1e-12)


def test_degenerate_hands_rejected():
    spec = TaskSpec.by_name("straight")
    with pytest.raises(ValueError):
        expert_action(spec, INIT_V2, INIT_V2)
    with pytest.raises(ValueError):
        # v3 - v2 parallel to the task axis
        expert_action(spec, INIT_V2, INIT_V2 + np.array([0.0, 0.0, 0.2]))


def rot_z(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def test_rotation_equivariance_about_axis():
    rng = np.random.default_rng(1)
    for task in ("straight", "bend", "twist"):
        spec = TaskSpec.by_name(task)
        for _ in range(100):
            v2 = rng.uniform(-0.3, 0.5, 3)
            v3 = v2 + rng.uniform(-0.25, 0.25, 3)
            if np.linalg.norm(np.cross(Z, v3 - v2)) < 1e-3:
                continue
            phi = rng.uniform(0, 2 * np.pi)
            R = rot_z(phi)
            a = expert_action(spec, v2, v3)
            b = expert_action(spec, R @ v2, R @ v3)
            assert np.max(np.abs(b[:3] - R @ a[:3])) < 1e-9
            assert np.max(np.abs(b[3:] - R @ a[3:])) < 1e-9


def test_translation_invariance():
    rng = np.random.default_rng(2)
    for task in ("straight", "bend", "twist"):
        spec = TaskSpec.by_name(task)
        for _ in range(100):
            v2 = rng.uniform(-0.3, 0.5, 3)
            v3 = v2 + rng.uniform(-0.25, 0.25, 3)
            if np.linalg.norm(np.cross(Z, v3 - v2)) < 1e-3:
                continue
            t = rng.uniform(-1.0, 1.0, 3)
            a = expert_action(spec, v2, v3)
            b = expert_action(spec, v2 + t, v3 + t)
            assert np.max(np.abs(b[:3] - (a[:3] + t))) < 1e-9
            assert np.max(np.abs(b[3:] - (a[3:] + t))) < 1e-9


def test_parallel_offset_preserves_hand_distance():
    rng = np.random.default_rng(3)
    for task in ("straight", "bend"):
        spec = TaskSpec.by_name(task)
        for _ in range(50):
            v2 = rng.uniform(-0.3, 0.5, 3)
            v3 = v2 + rng.uniform(-0.25, 0.25, 3)
            if np.linalg.norm(np.cross(Z, v3 - v2)) < 1e-3:
                continue
            a = expert_action(spec, v2, v3)
            assert np.linalg.norm(a[:3] - a[3:]) == pytest.approx(
                np.linalg.norm(v2 - v3), abs=1e-12)


def test_unknown_task_rejected():
    with pytest.raises(ValueError):
        TaskSpec.by_name("fold")
    with pytest.raises(ValueError):
        TaskSpec.by_id(9)


# ------------------------------------------------------------- human motion


def test_hand_at_waypoint_stays_put():
    model = HumanMotionModel()
    rng = np.random.default_rng(0)
    model.waypoints = (INIT_V2.copy(), INIT_V3.copy())
    model.nominal = (INIT_V2.copy(), INIT_V3.copy())
    v2, v3 = human_step(model, (INIT_V2, INIT_V3), 0.01, rng)
    assert np.array_equal(v2, INIT_V2)
    assert np.array_equal(v3, INIT_V3)


def test_hand_step_clamped_per_axis():
    model = HumanMotionModel()
    rng = np.random.default_rng(0)
    far = INIT_V2 + np.array([1.0, 0.0, 0.0])
    model.waypoints = (far, INIT_V3.copy())
    v2, v3 = human_step(model, (INIT_V2, INIT_V3), 0.01, rng)
    assert np.allclose(v2 - INIT_V2, [0.001, 0.0, 0.0], atol=1e-15)
    assert np.array_equal(v3, INIT_V3)


def test_waypoint_samples_respect_separation():
    model = HumanMotionModel()
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        w2, w3 = model.sample_waypoints(rng)
        assert np.linalg.norm(w2 - w3) <= HAND_SEPARATION_MAX
        assert np.all(w2 >= model.box_min) and np.all(w2 <= model.box_max)


def test_clamp_separation():
    v2 = np.array([0.0, 0.0, 0.0])
    v3 = np.array([0.5, 0.0, 0.0])
    c2, c3 = clamp_separation(v2, v3, 0.3)
    assert np.linalg.norm(c2 - c3) == pytest.approx(0.3, abs=1e-12)
    assert np.allclose((c2 + c3) / 2, (v2 + v3) / 2)
    # already satisfied: untouched
    d2, d3 = clamp_separation(c2, c3, 0.3)
    assert np.array_equal(c2, d2) and np.array_equal(c3, d3)


def test_perturbed_steps_stay_within_separation():
    model = HumanMotionModel(perturb_sigma=0.02)
    rng = np.random.default_rng(5)
    v2, v3 = INIT_V2.copy(), INIT_V3.copy()
    for _ in range(500):
        v2, v3 = human_step(model, (v2, v3), 0.01, rng)
        assert np.linalg.norm(v2 - v3) <= HAND_SEPARATION_MAX + 1e-12
