"""Analytic expert policies and the constrained random human-hand motion.

Given the two human-held corners v2 and v3, each task has a closed-form
optimal placement of the robot-held corners v0 and v1:

  straight: offset both hands by 0.35 m along d1
  bend:     offset both hands by 0.175 m along d1
  twist:    midpoint + 0.31 m along d1, +/- 0.15 m along d2

where d1 = z x (v3 - v2) normalized, d2 = (v3 - v2) x d1-direction
normalized, and z = (0, 0, -1).  With that z, the straight expert maps the
initial hand corners exactly onto the initial robot corners.
"""

from dataclasses import dataclass, field

import numpy as np

AXIS_Z = np.array([0.0, 0.0, -1.0])

TASK_STRAIGHT = 0
TASK_BEND = 1
TASK_TWIST = 2
TASK_NAMES = {TASK_STRAIGHT: "straight", TASK_BEND: "bend", TASK_TWIST: "twist"}
TASK_IDS = {v: k for k, v in TASK_NAMES.items()}

STRAIGHT_OFFSET = 0.35
BEND_OFFSET = 0.175
TWIST_OFFSET_MAIN = 0.31
TWIST_OFFSET_SIDE = 0.15


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    name: str
    axis: tuple = (0.0, 0.0, -1.0)

    @classmethod
    def by_name(cls, name: str) -> "TaskSpec":
        key = name.strip().lower()
        if key not in TASK_IDS:
            raise ValueError(f"unknown task {name!r}; expected one of "
                             f"{sorted(TASK_IDS)}")
        return cls(TASK_IDS[key], key)

    @classmethod
    def by_id(cls, task_id: int) -> "TaskSpec":
        if task_id not in TASK_NAMES:
            raise ValueError(f"unknown task id {task_id}")
        return cls(task_id, TASK_NAMES[task_id])


def expert_action(task: TaskSpec, v2, v3) -> np.ndarray:
    """Optimal robot corner targets (6-vector: v0 then v1) for the task."""
    v2 = np.asarray(v2, dtype=np.float64).reshape(3)
    v3 = np.asarray(v3, dtype=np.float64).reshape(3)
    if not (np.isfinite(v2).all() and np.isfinite(v3).all()):
        raise ValueError("non-finite hand positions")
    diff = v3 - v2
    if np.linalg.norm(diff) <= 1e-6:
        raise ValueError("degenerate hands: v2 and v3 coincide")
    z = np.asarray(task.axis, dtype=np.float64)
    c1 = np.cross(z, diff)
    n1 = np.linalg.norm(c1)
    if n1 <= 1e-6:
        raise ValueError("degenerate hands: v3 - v2 is parallel to the task axis")
    d1 = c1 / n1

    if task.task_id == TASK_STRAIGHT:
        v0 = v2 + STRAIGHT_OFFSET * d1
        v1 = v3 + STRAIGHT_OFFSET * d1
    elif task.task_id == TASK_BEND:
        v0 = v2 + BEND_OFFSET * d1
        v1 = v3 + BEND_OFFSET * d1
    elif task.task_id == TASK_TWIST:
        c2 = np.cross(diff, c1)
        d2 = c2 / np.linalg.norm(c2)
        mid = (v2 + v3) / 2.0
        v0 = mid + TWIST_OFFSET_MAIN * d1 + TWIST_OFFSET_SIDE * d2
        v1 = mid + TWIST_OFFSET_MAIN * d1 - TWIST_OFFSET_SIDE * d2
    else:
        raise ValueError(f"unknown task id {task.task_id}")
    return np.concatenate([v0, v1])


HAND_SEPARATION_MAX = 0.3   # m, keeps the cloth from tearing
HAND_SPEED_LIMIT = 0.1      # m/s, per-axis


@dataclass
class HumanMotionModel:
    """Waypoint-chasing hand motion inside a box, with optional jitter.

    Hands move toward the active waypoint pair with each axis clamped to
    speed_limit * dt; when both hands arrive, a fresh pair is rejection
    sampled inside the box until the separation constraint holds.
    """
    box_min: tuple = (-0.1, 0.2, -0.2)
    box_max: tuple = (0.4, 0.5, 0.2)
    waypoint_count: int = 10
    speed_limit: float = HAND_SPEED_LIMIT
    separation_max: float = HAND_SEPARATION_MAX
    perturb_sigma: float = 0.0
    waypoints: tuple = field(default=None, repr=False)   # active (w2, w3)
    nominal: tuple = field(default=None, repr=False)     # noise-free track
    waypoints_used: int = 0

    def sample_waypoints(self, rng) -> tuple:
        lo = np.asarray(self.box_min, dtype=np.float64)
        hi = np.asarray(self.box_max, dtype=np.float64)
        while True:
            w2 = rng.uniform(lo, hi)
            w3 = rng.uniform(lo, hi)
            if np.linalg.norm(w2 - w3) <= self.separation_max:
                return w2, w3


def clamp_separation(v2: np.ndarray, v3: np.ndarray, limit: float = HAND_SEPARATION_MAX):
    """Pull both hands toward their midpoint until the gap is at most limit."""
    d = v3 - v2
    dist = float(np.linalg.norm(d))
    if dist <= limit or dist == 0.0:
        return v2, v3
    mid = (v2 + v3) / 2.0
    half = d * (limit / dist / 2.0)
    return mid - half, mid + half


def human_step(model: HumanMotionModel, current, dt: float, rng):
    """One dt of hand motion; returns the new (v2, v3) target pair.

    The waypoint chase runs on a noise-free internal track (seeded from
    `current` on the first call); the optional Gaussian perturbation is
    applied on top of that track and re-projected onto the separation
    constraint, so jitter never accumulates into the motion itself.
    """
    if model.nominal is None:
        model.nominal = (np.asarray(current[0], dtype=np.float64).copy(),
                         np.asarray(current[1], dtype=np.float64).copy())
    if model.waypoints is None:
        model.waypoints = model.sample_waypoints(rng)
        model.waypoints_used = 1
    v2, v3 = model.nominal
    w2, w3 = model.waypoints
    lim = model.speed_limit * dt
    v2 = v2 + np.clip(w2 - v2, -lim, lim)
    v3 = v3 + np.clip(w3 - v3, -lim, lim)
    model.nominal = (v2, v3)

    arrived = (np.max(np.abs(w2 - v2)) < 1e-9 and np.max(np.abs(w3 - v3)) < 1e-9)
    if arrived:
        model.waypoints = model.sample_waypoints(rng)
        model.waypoints_used += 1

    if model.perturb_sigma > 0.0:
        v2 = v2 + rng.normal(0.0, model.perturb_sigma, 3)
        v3 = v3 + rng.normal(0.0, model.perturb_sigma, 3)
        v2, v3 = clamp_separation(v2, v3, model.separation_max)
    return v2, v3
