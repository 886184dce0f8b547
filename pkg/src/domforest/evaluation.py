"""Closed-loop controller evaluation against the expert.

An episode drives the human hands through random waypoints while the
controller under test moves the robot corners from depth observations
alone.  At every control step the expert label is computed from the true
hand positions, and the episode error is the mean squared per-dimension
distance between the controller's action and the expert's.
"""

from dataclasses import dataclass, field

import numpy as np

from . import forest as forest_mod
from .cloth import corner_positions, step
from .expert import TaskSpec, expert_action, human_step
from .features import AlignmentError, extract
from .imitation import Workbench
from .observation import NoiseSpec, apply_noise, render_depth


def expert_controller(task: TaskSpec):
    def act(feature, v2, v3):
        return expert_action(task, v2, v3)

    return act


def forest_controller(forest: forest_mod.RandomForest, task: TaskSpec):
    def act(feature, v2, v3):
        return forest_mod.predict_action(forest, feature, task.task_id)

    return act


def baseline_controller(model):
    def act(feature, v2, v3):
        return model.predict(feature)

    return act


@dataclass
class EpisodeResult:
    index: int
    error: float            # mean ||a_ctrl - a_expert||^2 / 6 over steps
    steps: int
    skipped: int
    waypoints_reached: int
    trajectory: list = field(repr=False, default_factory=list)


@dataclass
class EvalResult:
    episodes: list
    mean_error: float

    def errors(self):
        return [e.error for e in self.episodes]


def run_episode(bench: Workbench, task: TaskSpec, controller, rng,
                noise: NoiseSpec = None, max_steps: int = 100,
                keep_trajectory: bool = False, index: int = 0) -> EpisodeResult:
    mesh, state = bench.fresh_cloth()
    model = bench.motion_model()
    model.perturb_sigma = 0.0    # evaluation hands move cleanly
    _, _, v2t, v3t = corner_positions(state, mesh)
    sq_sum = 0.0
    recorded = 0
    skipped = 0
    trajectory = []
    a_exec = None

    for _ in range(max_steps):
        img = render_depth(state, mesh, bench.camera)
        if noise is not None and not noise.is_zero():
            img = apply_noise(img, noise, int(rng.integers(0, 2**63 - 1)))
        v0, v1, v2, v3 = corner_positions(state, mesh)
        a_exp = expert_action(task, v2, v3)
        try:
            f = extract(img, bench.bank, size=bench.canvas)
        except AlignmentError:
            f = None
            skipped += 1
        if f is not None:
            a_ctrl = np.asarray(controller(f, v2, v3), dtype=np.float64)
            diff = a_ctrl - a_exp
            sq_sum += float(diff @ diff) / diff.size
            recorded += 1
            a_exec = a_ctrl
        if a_exec is None:
            a_exec = a_exp
        if keep_trajectory:
            trajectory.append((state.time, np.stack([v0, v1, v2, v3]), a_exec))

        for _ in range(bench.sim_steps_per_control):
            v2t, v3t = human_step(model, (v2t, v3t), bench.sim.dt, rng)
            state = step(state, mesh, bench.sim, a_exec, (v2t, v3t))
        if model.waypoints_used > bench.waypoint_count:
            break

    error = sq_sum / recorded if recorded else float("nan")
    return EpisodeResult(index, error, recorded, skipped,
                         min(model.waypoints_used, bench.waypoint_count),
                         trajectory)


def evaluate(bench: Workbench, task: TaskSpec, controller, episodes: int,
             seed: int, noise: NoiseSpec = None, max_steps: int = 100,
             keep_trajectory: bool = False) -> EvalResult:
    """Run several independent episodes; deterministic given the seed."""
    results = []
    for e in range(episodes):
        rng = np.random.default_rng(np.random.SeedSequence((seed, e)))
        results.append(run_episode(bench, task, controller, rng, noise,
                                   max_steps, keep_trajectory, index=e))
    errs = [r.error for r in results if np.isfinite(r.error)]
    mean_err = float(np.mean(errs)) if errs else float("nan")
    return EvalResult(results, mean_err)


def write_eval_csv(result: EvalResult, path) -> None:
    """One row per episode plus a summary row."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("record,episode,error,steps,skipped,waypoints\n")
        for r in result.episodes:
            fh.write(f"episode,{r.index},{r.error!r},{r.steps},{r.skipped},"
                     f"{r.waypoints_reached}\n")
        fh.write(f"summary,,{result.mean_error!r},,,\n")
