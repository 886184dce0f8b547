"""Command-line entry points: train, eval, compare, serve.

    domforest train --config run.ini --out runs/
    domforest eval --checkpoint runs/run --task straight --episodes 10
    domforest compare --dataset data.csv --fractions 20,40,60,80,100
    domforest serve --checkpoint runs/run --port 8765 --ui-dir frontend

Every command is reproducible from the checkpoint's config snapshot and
seed; DOMFOREST_SEED overrides the configured seed.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines, forest as forest_mod
from .cloth import write_trajectory
from .config import ConfigError, RunConfig, default_config, load_config, save_config
from .data import Dataset, load_dataset, save_dataset
from .evaluation import (baseline_controller, evaluate, expert_controller,
                         forest_controller, write_eval_csv)
from .expert import TaskSpec
from .imitation import train as imitation_train, write_metrics
from .labeling import mean_shift
from .observation import NoiseSpec


def _load_config_or_exit(path) -> RunConfig:
    if path is None:
        return default_config()
    p = Path(path)
    if not p.exists():
        print(f"error: config file not found: {p}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return load_config(p)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _checkpoint_config(checkpoint: Path) -> RunConfig:
    snap = checkpoint / "config.ini"
    if not snap.exists():
        print(f"error: no config snapshot in checkpoint: {snap}", file=sys.stderr)
        raise SystemExit(2)
    return load_config(snap)


def cmd_train(args) -> int:
    cfg = _load_config_or_exit(args.config)
    out_root = Path(args.out)
    ckpt = out_root / cfg.get("run", "id")
    ckpt.mkdir(parents=True, exist_ok=True)

    bench = cfg.workbench()
    icfg = cfg.imitation_config()
    print(f"training: tasks={[t.name for t in cfg.task_specs()]} "
          f"seed={cfg.get('run', 'seed')} out={ckpt}")
    result = imitation_train(icfg, bench, log=print)

    forest_mod.save(result.forest, ckpt / "forest.rfcl")
    if result.first_forest is not None:
        forest_mod.save(result.first_forest, ckpt / "forest_iter1.rfcl")
    write_metrics(result.metrics, ckpt / "metrics.csv")
    save_dataset(result.dataset, ckpt / "dataset.csv")
    if len(result.probe):
        save_dataset(result.probe, ckpt / "probe.csv")
    save_config(cfg, ckpt / "config.ini")

    # cluster summary per task over the final aggregate
    for task in cfg.task_specs():
        rows = result.dataset.task_rows(task.task_id)
        if rows.size == 0:
            continue
        labels, modes = mean_shift(result.dataset.actions[rows],
                                   cfg.get("labeling", "bandwidth"))
        sizes = np.bincount([l.cluster for l in labels])
        print(f"task {task.name}: {len(modes)} action clusters, "
              f"sizes {sizes.tolist()}")
        for i, mode in enumerate(modes):
            print(f"  cluster {i}: mode [" +
                  " ".join(f"{v:.4f}" for v in mode) + "]")
    last = result.metrics[-1]
    print(f"done: {last.iteration} iterations, err={last.err_aggregate:.3e} "
          f"probe={last.err_probe:.3e} leaves={last.total_leaves}")
    print(f"checkpoint: {ckpt}")
    return 0


def _controller_for(name: str, checkpoint: Path, task: TaskSpec):
    if name == "expert":
        return expert_controller(task)
    if name == "forest":
        return forest_controller(forest_mod.load(checkpoint / "forest.rfcl"), task)
    if name == "forest_iter1":
        return forest_controller(forest_mod.load(checkpoint / "forest_iter1.rfcl"), task)
    if name == "linear":
        return baseline_controller(baselines.load_linear(checkpoint / "linear.linm"))
    if name == "mlp":
        return baseline_controller(baselines.load_mlp(checkpoint / "mlp.mlpm"))
    raise SystemExit(f"error: unknown controller {name!r}")


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        print(f"error: checkpoint not found: {ckpt}", file=sys.stderr)
        return 2
    cfg = _checkpoint_config(ckpt)
    task = TaskSpec.by_name(args.task)
    trained = cfg.get("imitation", "tasks")
    if args.controller.startswith("forest") and task.task_id not in trained:
        names = [TaskSpec.by_id(t).name for t in trained]
        print(f"error: checkpoint was trained on {names}, not {task.name!r}",
              file=sys.stderr)
        return 2

    bench = cfg.workbench()
    bench.hand_noise_sigma = 0.0
    bench.train_noise = NoiseSpec()
    noise = None
    if args.noise_sigma > 0 or args.noise_occluders > 0 or args.noise_dropout > 0:
        noise = NoiseSpec(depth_sigma=args.noise_sigma,
                          occluder_count=args.noise_occluders,
                          dropout_prob=args.noise_dropout)
    controller = _controller_for(args.controller, ckpt, task)
    seed = args.seed if args.seed is not None else cfg.get("run", "seed")
    result = evaluate(bench, task, controller, episodes=args.episodes,
                      seed=seed, noise=noise,
                      max_steps=cfg.get("eval", "max_steps"),
                      keep_trajectory=args.dump_trajectories)

    out = Path(args.out) if args.out else ckpt
    out.mkdir(parents=True, exist_ok=True)
    out_file = out / f"eval_{task.name}_{args.controller}.csv"
    write_eval_csv(result, out_file)
    if args.dump_trajectories:
        for ep in result.episodes:
            write_trajectory(out / f"trajectory_{task.name}_{ep.index}.csv",
                             ep.trajectory)
    for ep in result.episodes:
        print(f"episode {ep.index}: err={ep.error:.3e} steps={ep.steps} "
              f"waypoints={ep.waypoints_reached}")
    print(f"mean error over {args.episodes} episodes: {result.mean_error:.3e}")
    print(f"wrote {out_file}")
    return 0


def _labels_for(ds: Dataset, bandwidth: float) -> np.ndarray:
    labels = np.zeros(len(ds), dtype=np.int64)
    offset = 0
    for task in sorted(np.unique(ds.task_ids).tolist()):
        rows = ds.task_rows(int(task))
        task_labels, _ = mean_shift(ds.actions[rows], bandwidth)
        ids = np.array([l.cluster for l in task_labels])
        labels[rows] = ids + offset
        offset += int(ids.max()) + 1
    return labels


def _residual(model, ds: Dataset, kind: str) -> float:
    if kind == "forest":
        total = 0.0
        for task in np.unique(ds.task_ids):
            rows = ds.task_rows(int(task))
            pred, _ = forest_mod.predict_batch(model, ds.features[rows], int(task))
            diff = ds.actions[rows] - pred
            total += float(np.sum(diff * diff))
        return total / (6 * len(ds))
    pred = model.predict_batch(ds.features)
    diff = ds.actions - pred
    return float(np.mean(diff * diff))


def cmd_compare(args) -> int:
    path = Path(args.dataset)
    if not path.exists():
        print(f"error: dataset not found: {path}", file=sys.stderr)
        return 2
    cfg = _load_config_or_exit(args.config)
    ds = load_dataset(path)
    if len(ds) < 100:
        print(f"error: need at least 100 rows, got {len(ds)}", file=sys.stderr)
        return 2
    fractions = [int(f) for f in args.fractions.split(",")]
    seed = args.seed if args.seed is not None else cfg.get("run", "seed")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ds))
    n_test = max(1, int(round(0.2 * len(ds))))
    test = ds.subset(order[:n_test])
    train_rows = order[n_test:]

    bl = cfg["baselines"]
    rows_out = []
    for name in ("forest", "mlp", "linear"):
        cells = []
        for frac in fractions:
            take = max(1, int(round(len(train_rows) * frac / 100.0)))
            sub = ds.subset(train_rows[:take])
            if name == "forest":
                labels = _labels_for(sub, cfg.get("labeling", "bandwidth"))
                fcfg = replace(cfg.forest_config(), seed=seed)
                model = forest_mod.train_forest(sub.features, sub.actions,
                                                labels, sub.task_ids, fcfg)
            elif name == "mlp":
                model = baselines.fit_mlp(sub, epochs=bl["mlp_epochs"],
                                          lr=bl["mlp_lr"], batch=bl["mlp_batch"],
                                          seed=seed)
            else:
                model = baselines.fit_linear(sub, ridge=bl["ridge"])
            cells.append(_residual(model, test, name))
        rows_out.append((name, cells))

    header = "model," + ",".join(f"{f}%" for f in fractions)
    lines = [header]
    print(header)
    for name, cells in rows_out:
        line = name + "," + ",".join(repr(c) for c in cells)
        lines.append(line)
        print(line)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
        print(f"wrote {out / 'comparison.csv'}")
    return 0


def cmd_serve(args) -> int:
    from . import server as server_mod

    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        print(f"error: checkpoint not found: {ckpt}", file=sys.stderr)
        return 2
    cfg = _checkpoint_config(ckpt)
    bench = cfg.workbench()
    bench.hand_noise_sigma = 0.0
    bench.train_noise = NoiseSpec()
    trained = cfg.get("imitation", "tasks")
    task = TaskSpec.by_id(trained[0]).name
    try:
        server_mod.serve(ckpt, port=args.port, host=args.host, task=task,
                         bench=bench, tick_hz=cfg.get("server", "tick_hz"),
                         controller_every=cfg.get("server", "controller_every"),
                         decimate=cfg.get("server", "decimate"),
                         ui_dir=args.ui_dir)
    except OSError as exc:
        print(f"error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domforest",
        description="Random-forest visual controller for cloth manipulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run imitation training")
    p_train.add_argument("--config", help="INI config file (defaults apply)")
    p_train.add_argument("--out", default="runs", help="output directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--task", required=True,
                        choices=["straight", "bend", "twist"])
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--controller", default="forest",
                        choices=["forest", "forest_iter1", "expert", "linear", "mlp"])
    p_eval.add_argument("--noise-sigma", type=float, default=0.0)
    p_eval.add_argument("--noise-occluders", type=int, default=0)
    p_eval.add_argument("--noise-dropout", type=float, default=0.0)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--dump-trajectories", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="forest vs MLP vs linear grid")
    p_cmp.add_argument("--dataset", required=True, help="dataset CSV")
    p_cmp.add_argument("--fractions", default="20,40,60,80,100")
    p_cmp.add_argument("--config", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_srv = sub.add_parser("serve", help="live human-in-the-loop session")
    p_srv.add_argument("--checkpoint", required=True)
    p_srv.add_argument("--port", type=int, default=8765)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--ui-dir", default=None)
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
