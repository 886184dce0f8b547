"""Dataset-aggregation imitation learning for the forest controller.

Each outer iteration rolls out the cloth simulation, executing the expert
with probability beta_n = p^(n-1) and the current forest otherwise.  Every
visited state is labeled with the expert action and appended to the
aggregate dataset (labels are always the expert's, never the learner's);
the forest is then rebuilt from scratch on the aggregate.  A slice of
extra iteration-1 expert rollouts is held out as a probe set that is never
trained on, giving an unbiased error curve.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import forest as forest_mod
from .cloth import SimParams, corner_positions, make_cloth, step
from .data import Dataset
from .expert import HumanMotionModel, TaskSpec, expert_action, human_step
from .features import AlignmentError, GaborBank, extract
from .labeling import label_ids
from .observation import NoiseSpec, apply_noise, default_camera, render_depth


@dataclass
class Workbench:
    """Everything a rollout needs: cloth template, camera, feature bank."""
    grid_nx: int = 21
    grid_ny: int = 24
    sim: SimParams = field(default_factory=SimParams)
    camera: object = None
    bank: GaborBank = None
    canvas: int = 128
    sim_steps_per_control: int = 10     # sim dt steps between controller acts
    box_min: tuple = (-0.1, 0.2, -0.2)
    box_max: tuple = (0.4, 0.5, 0.2)
    waypoint_count: int = 10
    hand_noise_sigma: float = 0.0
    train_noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.camera is None:
            self.camera = default_camera()
        if self.bank is None:
            self.bank = GaborBank.default()

    def fresh_cloth(self):
        return make_cloth(self.grid_nx, self.grid_ny)

    def motion_model(self) -> HumanMotionModel:
        return HumanMotionModel(box_min=self.box_min, box_max=self.box_max,
                                waypoint_count=self.waypoint_count,
                                speed_limit=self.sim.human_speed_limit,
                                perturb_sigma=self.hand_noise_sigma)


@dataclass
class ImitationConfig:
    iterations: int = 10
    samples_per_iteration: int = 500
    fraction_term: float = 0.8          # beta_n = fraction_term ** (n-1)
    rollout_length: int = 25            # control steps per rollout
    tasks: tuple = (0,)
    probe_fraction: float = 0.2
    bandwidth: float = 0.02             # mean-shift bandwidth, meters
    forest: forest_mod.TrainConfig = field(default_factory=forest_mod.TrainConfig)
    seed: int = 0
    early_stop: bool = True
    converge_tol: float = 0.05
    converge_window: int = 3

    def __post_init__(self):
        if not (0.0 < self.fraction_term <= 1.0):
            raise ValueError("fraction_term must be in (0, 1]")
        if self.samples_per_iteration < 1:
            raise ValueError("need at least one sample per iteration")
        if not (0.0 <= self.probe_fraction < 1.0):
            raise ValueError("probe_fraction must be in [0, 1)")


@dataclass
class IterationMetrics:
    iteration: int
    err_aggregate: float
    err_probe: float
    leaf_counts: list
    dataset_size: int
    wall_ms: float
    beta: float
    skipped: int
    executed_expert: list = field(repr=False, default_factory=list)

    @property
    def total_leaves(self) -> int:
        return int(sum(self.leaf_counts))


@dataclass
class TrainResult:
    forest: forest_mod.RandomForest
    metrics: list
    dataset: Dataset
    probe: Dataset
    first_forest: forest_mod.RandomForest = None
    converged_early: bool = False


def mean_action_error(ds: Dataset, forest: forest_mod.RandomForest) -> float:
    """Mean squared action distance per scalar dimension over the dataset."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    total = 0.0
    for task in np.unique(ds.task_ids):
        rows = ds.task_rows(int(task))
        pred, _ = forest_mod.predict_batch(forest, ds.features[rows], int(task))
        diff = ds.actions[rows] - pred
        total += float(np.sum(diff * diff))
    return total / (ds.actions.shape[1] * len(ds))


def collect_rollout(bench: Workbench, task: TaskSpec, n_steps: int,
                    hand_rng, mix_rng, noise_rng, beta: float, forest=None):
    """Run one rollout, labeling every visited state with the expert.

    Returns (features, expert actions, executed-expert flags, skipped).
    Steps whose foreground comes out empty are skipped but still simulated.
    """
    mesh, state = bench.fresh_cloth()
    model = bench.motion_model()
    feats, acts, exec_flags = [], [], []
    skipped = 0
    _, _, v2t, v3t = corner_positions(state, mesh)

    for _ in range(n_steps):
        img = render_depth(state, mesh, bench.camera)
        if not bench.train_noise.is_zero():
            img = apply_noise(img, bench.train_noise,
                              int(noise_rng.integers(0, 2**63 - 1)))
        _, _, v2, v3 = corner_positions(state, mesh)
        a_exp = expert_action(task, v2, v3)
        try:
            f = extract(img, bench.bank, size=bench.canvas)
        except AlignmentError:
            f = None
            skipped += 1
        if f is not None:
            feats.append(f)
            acts.append(a_exp)

        use_expert = (forest is None or f is None
                      or float(mix_rng.random()) < beta)
        a_exec = a_exp if use_expert else forest_mod.predict_action(
            forest, f, task.task_id)
        exec_flags.append(bool(use_expert))

        # advance the simulation for one control period, target held
        for _ in range(bench.sim_steps_per_control):
            v2t, v3t = human_step(model, (v2t, v3t), bench.sim.dt, hand_rng)
            state = step(state, mesh, bench.sim, a_exec, (v2t, v3t))

    return feats, acts, exec_flags, skipped


def relabel_and_train(ds: Dataset, cfg: ImitationConfig, iteration: int):
    """Mean-shift labels per task, then rebuild the forest from scratch."""
    labels = np.zeros(len(ds), dtype=np.int64)
    offset = 0
    for task in sorted(np.unique(ds.task_ids).tolist()):
        rows = ds.task_rows(int(task))
        ids = label_ids(ds.actions[rows], cfg.bandwidth)
        labels[rows] = ids + offset
        offset += int(ids.max()) + 1
    seed_word = int(np.random.SeedSequence((cfg.seed, iteration, 7)).generate_state(1)[0])
    fcfg = replace(cfg.forest, seed=seed_word)
    return forest_mod.train_forest(ds.features, ds.actions, labels,
                                   ds.task_ids, fcfg)


def run_iteration(n: int, cfg: ImitationConfig, bench: Workbench,
                  dataset: Dataset, forest=None, probe: Dataset = None):
    """One outer iteration; returns (dataset, forest, probe, metrics entry)."""
    if n < 1:
        raise ValueError("iterations are numbered from 1")
    if n > 1 and forest is None:
        raise ValueError("iterations beyond the first need a forest")
    t0 = time.perf_counter()
    beta = cfg.fraction_term ** (n - 1)
    ss = np.random.SeedSequence((cfg.seed, n))
    hand_rng, mix_rng, noise_rng, probe_rng = (
        np.random.default_rng(c) for c in ss.spawn(4))

    tasks = [TaskSpec.by_id(t) for t in cfg.tasks]
    skipped = 0
    exec_flags = []
    collected = 0
    r = 0
    while collected < cfg.samples_per_iteration:
        n_steps = min(cfg.rollout_length, cfg.samples_per_iteration - collected)
        task = tasks[r % len(tasks)]
        feats, acts, flags, skip = collect_rollout(
            bench, task, n_steps, hand_rng, mix_rng, noise_rng, beta, forest)
        if feats:
            dataset.append(np.array(feats), np.array(acts), task.task_id, n)
        skipped += skip
        exec_flags.extend(flags)
        collected += n_steps
        r += 1

    if n == 1 and cfg.probe_fraction > 0.0:
        if probe is None:
            probe = Dataset()
        want = int(round(cfg.samples_per_iteration * cfg.probe_fraction
                         / (1.0 - cfg.probe_fraction)))
        got = 0
        r = 0
        while got < want:
            n_steps = min(cfg.rollout_length, want - got)
            task = tasks[r % len(tasks)]
            feats, acts, _, _ = collect_rollout(
                bench, task, n_steps, probe_rng, probe_rng, probe_rng, 1.0, None)
            if feats:
                probe.append(np.array(feats), np.array(acts), task.task_id, n)
            got += n_steps
            r += 1

    new_forest = relabel_and_train(dataset, cfg, n)
    err_agg = mean_action_error(dataset, new_forest)
    err_probe = (mean_action_error(probe, new_forest)
                 if probe is not None and len(probe) else float("nan"))
    entry = IterationMetrics(
        iteration=n,
        err_aggregate=err_agg,
        err_probe=err_probe,
        leaf_counts=forest_mod.leaf_counts(new_forest),
        dataset_size=len(dataset),
        wall_ms=(time.perf_counter() - t0) * 1000.0,
        beta=beta,
        skipped=skipped,
        executed_expert=exec_flags,
    )
    return dataset, new_forest, probe, entry


def _window_rel_change(values) -> float:
    vmax = max(values)
    vmin = min(values)
    if vmax == 0:
        return 0.0
    return (vmax - vmin) / vmax


def train(cfg: ImitationConfig, bench: Workbench, log=None) -> TrainResult:
    """Run the outer loop until max iterations or convergence.

    Convergence means the relative spread of both the total leaf count and
    the aggregate error stays below converge_tol across the last
    converge_window iterations.
    """
    dataset = Dataset()
    probe = Dataset()
    forest = None
    metrics = []
    first_forest = None
    converged = False
    for n in range(1, cfg.iterations + 1):
        dataset, forest, probe, entry = run_iteration(
            n, cfg, bench, dataset, forest, probe)
        metrics.append(entry)
        if n == 1:
            first_forest = forest
        if log is not None:
            log(f"iteration {n}: err={entry.err_aggregate:.3e} "
                f"probe={entry.err_probe:.3e} leaves={entry.total_leaves} "
                f"|D|={entry.dataset_size} beta={entry.beta:.3f}")
        if cfg.early_stop and len(metrics) >= cfg.converge_window:
            recent = metrics[-cfg.converge_window:]
            leaf_change = _window_rel_change([m.total_leaves for m in recent])
            err_change = _window_rel_change([m.err_aggregate for m in recent])
            if leaf_change < cfg.converge_tol and err_change < cfg.converge_tol:
                converged = True
                if log is not None:
                    log(f"converged after {n} iterations "
                        f"(leaf change {leaf_change:.3%}, error change {err_change:.3%})")
                break
    return TrainResult(forest, metrics, dataset, probe, first_forest, converged)


def write_metrics(metrics, path) -> None:
    """CSV columns: iteration, err_aggregate, err_probe, total_leaves,
    dataset_size, wall_ms."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,err_aggregate,err_probe,total_leaves,"
                 "dataset_size,wall_ms\n")
        for m in metrics:
            fh.write(f"{m.iteration},{m.err_aggregate!r},{m.err_probe!r},"
                     f"{m.total_leaves},{m.dataset_size},{m.wall_ms:.1f}\n")
