"""Command-line harness.

Subcommands: ``train``, ``compare``, ``verify-theory``, ``surface``,
``trajectory``, ``sweep``. Exit codes: 0 success, 1 verification failure,
2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .analysis import pca_project, surface_grid
from .checkpoint import load_checkpoint
from .configfile import parse_config
from .landscapes import landscape_loss
from .nn import MlpSpec, loss_and_grad
from .runconfig import DATASET_KINDS, TwoMoonsTask
from .runner import compare_runs, load_run_dir, sweep, train_run
from .verify import format_table, run_all_checks


def _load_config(path_text: str, parser: argparse.ArgumentParser):
    path = Path(path_text)
    if not path.is_file():
        parser.exit(2, f"error: config file not found: {path}\n")
    try:
        return parse_config(path)
    except ValueError as exc:
        parser.exit(2, f"error: {exc}\n")


def _cmd_train(args, parser) -> int:
    cfg = _load_config(args.config, parser)
    out = args.out or cfg.out_dir
    if out is None:
        out = Path("runs") / Path(args.config).stem
    artifact = train_run(cfg, out_dir=out)
    print(f"run written to {out} ({artifact.status}, {len(artifact.rows)} epochs, "
          f"{len(artifact.events)} interventions)")
    return 0 if artifact.status == "completed" else 1


def _cmd_compare(args, parser) -> int:
    try:
        baseline = load_run_dir(args.baseline)
        treated = load_run_dir(args.treated)
    except (FileNotFoundError, ValueError) as exc:
        parser.exit(2, f"error: {exc}\n")
    try:
        report = compare_runs(baseline, treated)
    except ValueError as exc:
        parser.exit(2, f"error: {exc}\n")
    print(report.to_text())
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
        print(f"per-epoch gaps written to {args.csv}")
    return 0


def _cmd_verify_theory(args, parser) -> int:
    results = run_all_checks()
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def _task_loss_fn(cfg, center_params):
    """Loss as a function of the flattened trainable vector for cfg's task."""
    if cfg.task.kind in DATASET_KINDS:
        if isinstance(cfg.task, TwoMoonsTask):
            from .data import gen_two_moons

            dataset = gen_two_moons(cfg.task.n, cfg.task.noise_std,
                                    rngmod.substream(cfg.seed, rngmod.STREAM_DATASET))
        else:
            from .data import load_csv_dataset

            dataset = load_csv_dataset(cfg.task.path, cfg.task.label_column, cfg.task.standardize)
        seed = cfg.seed if cfg.model_seed is None else cfg.model_seed
        spec = MlpSpec((dataset.dim, *cfg.hidden, dataset.class_count),
                       activation=cfg.activation, output="softmax", seed=seed)

        def fn(vec):
            loss, _ = loss_and_grad(center_params.with_vector(vec), spec,
                                    dataset.inputs, dataset.labels)
            return loss

        return fn
    if cfg.task.kind == "frozen":
        return lambda vec: 1.0
    spec = cfg.task.landscape()
    base = landscape_loss(spec)
    return lambda vec: base(vec)


def _cmd_surface(args, parser) -> int:
    cfg = _load_config(args.config, parser)
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        parser.exit(2, f"error: checkpoint not found: {ckpt}\n")
    params = load_checkpoint(ckpt)
    loss_fn = _task_loss_fn(cfg, params)
    seed_text = rngmod.substream(cfg.seed, rngmod.STREAM_DIRECTIONS).integers(2**31)
    grid = surface_grid(loss_fn, params.to_vector(), int(seed_text), args.range, args.steps)
    out = Path(args.out) if args.out else ckpt.with_name("surface.csv")
    grid.write_csv(out)
    print(f"{args.steps}x{args.steps} loss surface written to {out}")
    return 0


def _cmd_trajectory(args, parser) -> int:
    run_dir = Path(args.run_dir)
    snap_path = run_dir / "snapshots.csv"
    if not snap_path.is_file():
        parser.exit(2, f"error: {snap_path} not found; rerun with record_trajectory = true\n")
    lines = snap_path.read_text(encoding="utf-8").splitlines()[1:]
    snapshots = np.asarray([[float(v) for v in line.split(",")[1:]] for line in lines])
    result = pca_project(snapshots, k=args.components)
    out = Path(args.out) if args.out else run_dir / "trajectory.csv"
    k = result.projections.shape[1]
    with out.open("w", encoding="utf-8") as fh:
        fh.write("epoch," + ",".join(f"pc{i + 1}" for i in range(k)) + "\n")
        for epoch, row in enumerate(result.projections):
            fh.write(str(epoch) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    ratios = ", ".join(f"{r:.4%}" for r in result.explained_variance_ratio)
    print(f"projected {snapshots.shape[0]} snapshots onto {k} components ({ratios} variance) -> {out}")
    if result.rank_deficient:
        print("note: trajectory has lower rank than requested; components were truncated")
    return 0


def _cmd_sweep(args, parser) -> int:
    cfg = _load_config(args.config, parser)
    out_root = args.out or (Path("runs") / (Path(args.config).stem + "_sweep"))
    artifacts, summary = sweep(cfg, args.seeds, out_root=out_root)
    print(f"{args.seeds} seeds -> {out_root}")
    for key in ("mean_final_loss", "mean_final_accuracy", "escape_rate"):
        if key in summary:
            print(f"{key}: {summary[key]}")
    return 0 if summary["completed"] == args.seeds else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sal", description="stress-aware training experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="execute one run from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="run directory (overrides the config)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compare", help="compare two written runs of the same task")
    p.add_argument("baseline")
    p.add_argument("treated")
    p.add_argument("--csv", help="also write per-epoch accuracy gaps here")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("verify-theory", help="run the built-in numerical checks")
    p.set_defaults(func=_cmd_verify_theory)

    p = sub.add_parser("surface", help="sample a 2-D loss surface around a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("config")
    p.add_argument("--range", type=float, default=1.0, help="half-width of the grid")
    p.add_argument("--steps", type=int, default=21, help="odd grid resolution")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("trajectory", help="project a recorded weight trajectory")
    p.add_argument("run_dir")
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_trajectory)

    p = sub.add_parser("sweep", help="run several seeds of one config")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
