"""Run configuration: INI-style file with typed, validated sections.

Unknown sections or keys are rejected with the offending path; absent keys
fall back to defaults.  The environment variable DOMFOREST_SEED overrides
the configured seed.  `save` writes a normalized snapshot from which the
run is exactly reproducible.
"""

import configparser
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .cloth import SimParams
from .expert import TASK_IDS, TaskSpec
from .forest import TrainConfig
from .imitation import ImitationConfig, Workbench
from .observation import CameraModel, NoiseSpec


class ConfigError(ValueError):
    pass


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _parse_tasks(text):
    names = [t for t in text.replace(",", " ").split() if t]
    ids = []
    for name in names:
        if name.lower() not in TASK_IDS:
            raise ValueError(f"unknown task {name!r}")
        ids.append(TASK_IDS[name.lower()])
    if not ids:
        raise ValueError("no tasks given")
    return tuple(ids)


# section -> key -> (parser, default)
_SCHEMA = {
    "run": {
        "seed": (int, 0),
        "id": (str, "run"),
    },
    "sim": {
        "dt": (float, 0.01),
        "substeps": (int, 4),
        "k_structural": (float, 500.0),
        "k_shear": (float, 250.0),
        "k_bend": (float, 50.0),
        "damping": (float, 2.0),
        "gravity": (_parse_floats, (0.0, 0.0, -9.8)),
        "max_stretch": (float, 1.1),
        "robot_speed_limit": (float, 0.1),
        "human_speed_limit": (float, 0.1),
        "grid_nx": (int, 21),
        "grid_ny": (int, 24),
    },
    "camera": {
        "width": (int, 160),
        "height": (int, 120),
        "distance": (float, 0.8),
        "fov_deg": (float, 60.0),
        "near": (float, 0.2),
        "far": (float, 2.0),
    },
    "features": {
        "canvas": (int, 128),
    },
    "labeling": {
        "bandwidth": (float, 0.02),
    },
    "forest": {
        "trees": (int, 25),
        "max_depth": (int, 16),
        "min_gain": (float, 1e-4),
        "candidate_splits": (int, 64),
        "subsample": (float, 0.7),
    },
    "imitation": {
        "iterations": (int, 10),
        "samples_per_iteration": (int, 500),
        "fraction_term": (float, 0.8),
        "rollout_length": (int, 25),
        "sim_steps_per_control": (int, 10),
        "tasks": (_parse_tasks, (0,)),
        "probe_fraction": (float, 0.2),
        "early_stop": (_parse_bool, True),
        "converge_tol": (float, 0.05),
        "converge_window": (int, 3),
    },
    "human": {
        "box_min": (_parse_floats, (-0.1, 0.2, -0.2)),
        "box_max": (_parse_floats, (0.4, 0.5, 0.2)),
        "waypoints": (int, 10),
        "hand_noise_sigma": (float, 0.0),
    },
    "noise": {
        "depth_sigma": (float, 0.0),
        "occluders": (int, 0),
        "occluder_min": (int, 5),
        "occluder_max": (int, 30),
        "dropout": (float, 0.0),
    },
    "baselines": {
        "mlp_epochs": (int, 500),
        "mlp_batch": (int, 64),
        "mlp_lr": (float, 1e-3),
        "ridge": (float, 0.0),
    },
    "eval": {
        "episodes": (int, 10),
        "max_steps": (int, 100),
    },
    "server": {
        "tick_hz": (float, 30.0),
        "controller_every": (int, 1),
        "decimate": (int, 32),
    },
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    # ---- object builders ---------------------------------------------

    def sim_params(self) -> SimParams:
        s = self.values["sim"]
        return SimParams(dt=s["dt"], substeps=s["substeps"],
                         k_structural=s["k_structural"], k_shear=s["k_shear"],
                         k_bend=s["k_bend"], damping=s["damping"],
                         gravity=tuple(s["gravity"]), max_stretch=s["max_stretch"],
                         robot_speed_limit=s["robot_speed_limit"],
                         human_speed_limit=s["human_speed_limit"])

    def camera(self) -> CameraModel:
        c = self.values["camera"]
        center = (0.15, 0.175, 0.0)
        return CameraModel(position=(center[0], center[1], c["distance"]),
                           look_at=center, fov_y=np.deg2rad(c["fov_deg"]),
                           near=c["near"], far=c["far"],
                           width=c["width"], height=c["height"])

    def train_noise(self) -> NoiseSpec:
        n = self.values["noise"]
        return NoiseSpec(depth_sigma=n["depth_sigma"],
                         occluder_count=n["occluders"],
                         occluder_size_range=(n["occluder_min"], n["occluder_max"]),
                         dropout_prob=n["dropout"])

    def workbench(self) -> Workbench:
        s = self.values["sim"]
        h = self.values["human"]
        return Workbench(grid_nx=s["grid_nx"], grid_ny=s["grid_ny"],
                         sim=self.sim_params(), camera=self.camera(),
                         canvas=self.values["features"]["canvas"],
                         sim_steps_per_control=self.values["imitation"]["sim_steps_per_control"],
                         box_min=tuple(h["box_min"]), box_max=tuple(h["box_max"]),
                         waypoint_count=h["waypoints"],
                         hand_noise_sigma=h["hand_noise_sigma"],
                         train_noise=self.train_noise())

    def forest_config(self) -> TrainConfig:
        f = self.values["forest"]
        return TrainConfig(n_trees=f["trees"], max_depth=f["max_depth"],
                           min_gain=f["min_gain"],
                           candidate_splits=f["candidate_splits"],
                           subsample=f["subsample"],
                           seed=self.values["run"]["seed"])

    def imitation_config(self) -> ImitationConfig:
        i = self.values["imitation"]
        return ImitationConfig(iterations=i["iterations"],
                               samples_per_iteration=i["samples_per_iteration"],
                               fraction_term=i["fraction_term"],
                               rollout_length=i["rollout_length"],
                               tasks=i["tasks"],
                               probe_fraction=i["probe_fraction"],
                               bandwidth=self.values["labeling"]["bandwidth"],
                               forest=self.forest_config(),
                               seed=self.values["run"]["seed"],
                               early_stop=i["early_stop"],
                               converge_tol=i["converge_tol"],
                               converge_window=i["converge_window"])

    def task_specs(self):
        return [TaskSpec.by_id(t) for t in self.values["imitation"]["tasks"]]


def default_config() -> RunConfig:
    values = {sec: {k: default for k, (_, default) in keys.items()}
              for sec, keys in _SCHEMA.items()}
    return RunConfig(values)


def _apply_env_seed(cfg: RunConfig) -> RunConfig:
    env = os.environ.get("DOMFOREST_SEED")
    if env is not None:
        try:
            cfg.values["run"]["seed"] = int(env)
        except ValueError as exc:
            raise ConfigError(f"DOMFOREST_SEED must be an integer, got {env!r}") from exc
    return cfg


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    cfg = default_config()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            parse, _ = _SCHEMA[section][key]
            try:
                cfg.values[section][key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {section}.{key}: {exc}") from exc
    _validate(cfg, source)
    return _apply_env_seed(cfg)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def _validate(cfg: RunConfig, source: str) -> None:
    checks = [
        ("sim.dt", cfg.get("sim", "dt") > 0, "must be positive"),
        ("sim.substeps", cfg.get("sim", "substeps") >= 1, "must be >= 1"),
        ("sim.grid_nx", cfg.get("sim", "grid_nx") >= 2, "must be >= 2"),
        ("sim.grid_ny", cfg.get("sim", "grid_ny") >= 2, "must be >= 2"),
        ("sim.max_stretch", cfg.get("sim", "max_stretch") >= 1.0, "must be >= 1"),
        ("camera.width", cfg.get("camera", "width") >= 8, "must be >= 8"),
        ("camera.height", cfg.get("camera", "height") >= 8, "must be >= 8"),
        ("features.canvas", cfg.get("features", "canvas") % 8 == 0,
         "must be a multiple of 8"),
        ("labeling.bandwidth", cfg.get("labeling", "bandwidth") > 0, "must be positive"),
        ("forest.trees", cfg.get("forest", "trees") >= 1, "must be >= 1"),
        ("forest.subsample", 0 < cfg.get("forest", "subsample") <= 1,
         "must be in (0, 1]"),
        ("forest.min_gain", cfg.get("forest", "min_gain") >= 0, "must be >= 0"),
        ("imitation.fraction_term",
         0 < cfg.get("imitation", "fraction_term") <= 1, "must be in (0, 1]"),
        ("imitation.samples_per_iteration",
         cfg.get("imitation", "samples_per_iteration") >= 1, "must be >= 1"),
        ("imitation.probe_fraction",
         0 <= cfg.get("imitation", "probe_fraction") < 1, "must be in [0, 1)"),
        ("noise.dropout", 0 <= cfg.get("noise", "dropout") <= 1,
         "must be in [0, 1]"),
        ("sim.gravity", len(cfg.get("sim", "gravity")) == 3, "needs 3 components"),
        ("human.box_min", len(cfg.get("human", "box_min")) == 3, "needs 3 components"),
        ("human.box_max", len(cfg.get("human", "box_max")) == 3, "needs 3 components"),
        ("server.decimate", cfg.get("server", "decimate") >= 2, "must be >= 2"),
    ]
    for path, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{source}: {path} {msg}")


def save_config(cfg: RunConfig, path) -> None:
    """Normalized snapshot: every key written, sections and keys sorted."""
    lines = []
    for section in sorted(cfg.values):
        lines.append(f"[{section}]")
        for key in sorted(cfg.values[section]):
            val = cfg.values[section][key]
            if isinstance(val, tuple):
                if section == "imitation" and key == "tasks":
                    text = ",".join(TaskSpec.by_id(t).name for t in val)
                else:
                    text = ",".join(repr(float(v)) for v in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{key} = {text}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
