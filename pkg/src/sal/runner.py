"""Seeded experiment runs: the training loop, run artifacts, comparisons.

A run is fully determined by its :class:`RunConfig`. Every run writes the
same directory layout: ``config.echo``, ``epochs.csv``, ``events.jsonl``,
``final.salckpt`` and ``summary.json`` (plus ``snapshots.csv`` when weight
trajectories are recorded). Floats are serialized with round-trip-exact
formatting; wall-clock numbers live only in ``summary.json`` so the CSV and
event log are byte-stable across repeated runs.
"""
from __future__ import annotations

import configparser
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .analysis import grad_norm_sharpness, hutchinson_trace, hvp_from_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .configfile import render_config
from .control import SalController
from .data import SyntheticDataset, gen_two_moons, load_csv_dataset
from .errors import NonFiniteError
from .landscapes import landscape_eval
from .nn import MlpSpec, accuracy, forward, init_mlp, loss_and_grad
from .optim import make_optimizer, wrap_with_sal
from .params import Param, ParameterSet
from .perturb import InterventionEvent
from .runconfig import (
    CsvTask,
    DoubleWellTask,
    FrozenTask,
    QuadraticTask,
    RunConfig,
    TwoMoonsTask,
)
from .stress import EpochMetrics

STATUS_COMPLETED = "completed"
STATUS_DIVERGED = "diverged"


@dataclass
class EpochRow:
    epoch: int
    loss: float
    accuracy: float
    stress: float
    grad_norm: float
    trace: float | None = None
    wall_clock: float = 0.0


@dataclass
class RunArtifact:
    """Complete record of one seeded run."""

    config_echo: str
    rows: list[EpochRow]
    events: list[InterventionEvent]
    final_params: ParameterSet
    status: str = STATUS_COMPLETED
    summary: dict = field(default_factory=dict)
    snapshots: np.ndarray | None = None

    def stress_trace(self) -> np.ndarray:
        return np.asarray([row.stress for row in self.rows], dtype=np.float64)

    def task_section(self) -> dict:
        parser = configparser.ConfigParser()
        parser.read_string(self.config_echo)
        return dict(parser["task"])


# ---------------------------------------------------------------------------
# Tasks


class _FrozenRun:
    """Constant loss, zero gradients: a deterministic stagnation scenario."""

    def __init__(self, task: FrozenTask):
        self.dim = task.dim

    def init_params(self, cfg: RunConfig) -> ParameterSet:
        return ParameterSet([Param("w", np.zeros(self.dim))])

    def run_epoch(self, params, wrapped, data_rng):
        grads = ParameterSet([Param("w", np.zeros(self.dim))])
        params = wrapped.batch_step(params, grads)
        return 1.0, 0.0, params

    def grad_norm(self, params) -> float:
        return 0.0

    def trace_estimate(self, params, probes, probe_rng) -> float:
        return 0.0

    def summary_extras(self, params) -> dict:
        return {}


class _LandscapeRun:
    """One gradient evaluation per epoch over an analytic landscape."""

    def __init__(self, task):
        self.spec = task.landscape()
        self.start = task.start_point()
        self.task = task

    def init_params(self, cfg: RunConfig) -> ParameterSet:
        return ParameterSet([Param("w", self.start.copy())])

    def run_epoch(self, params, wrapped, data_rng):
        w = params["w"].values
        loss, grad, _ = landscape_eval(self.spec, w)
        grads = ParameterSet([Param("w", grad)])
        params = wrapped.batch_step(params, grads)
        return loss, 0.0, params

    def grad_norm(self, params) -> float:
        _, grad, _ = landscape_eval(self.spec, params["w"].values)
        return grad_norm_sharpness(grad)

    def trace_estimate(self, params, probes, probe_rng) -> float:
        w = params["w"].values.copy()
        hvp = hvp_from_grad(lambda v: landscape_eval(self.spec, v)[1], w)
        return hutchinson_trace(hvp, w.size, probes, probe_rng)

    def summary_extras(self, params) -> dict:
        w = params["w"].values
        loss, grad, trace = landscape_eval(self.spec, w)
        extras = {"final_point": [float(v) for v in w], "final_analytic_trace": trace}
        if isinstance(self.task, DoubleWellTask):
            sharp_center = self.spec.wells[0].center
            distance = float(np.linalg.norm(w - sharp_center))
            threshold = self.task.escape_threshold()
            extras["escape"] = {
                "distance_from_sharp": distance,
                "threshold": threshold,
                "escaped": distance > threshold,
            }
        return extras


class _DatasetRun:
    """Mini-batch training of the dense network on a labeled dataset."""

    def __init__(self, task, cfg: RunConfig):
        if isinstance(task, TwoMoonsTask):
            dataset = gen_two_moons(task.n, task.noise_std, rngmod.substream(cfg.seed, rngmod.STREAM_DATASET))
        else:
            dataset = load_csv_dataset(task.path, task.label_column, task.standardize)
        self.train, self.val = _split(dataset, cfg)
        widths = (dataset.dim, *cfg.hidden, dataset.class_count)
        seed = cfg.seed if cfg.model_seed is None else cfg.model_seed
        self.mlp = MlpSpec(widths=widths, activation=cfg.activation, output="softmax", seed=seed)
        self.batch_size = cfg.batch_size
        self.monitor = cfg.monitor

    def init_params(self, cfg: RunConfig) -> ParameterSet:
        return init_mlp(self.mlp)

    def run_epoch(self, params, wrapped, data_rng):
        order = data_rng.permutation(self.train.n)
        batch_losses, correct = [], 0
        for lo in range(0, self.train.n, self.batch_size):
            idx = order[lo:lo + self.batch_size]
            x, y = self.train.inputs[idx], self.train.labels[idx]
            loss, grads, preds = loss_and_grad(params, self.mlp, x, y, return_predictions=True)
            batch_losses.append(loss)
            correct += int(np.sum(np.argmax(preds, axis=1) == y))
            params = wrapped.batch_step(params, grads)
        mean_loss = float(np.mean(batch_losses))
        acc = correct / self.train.n
        if self.monitor == "val":
            mean_loss, acc = self._evaluate(params, self.val)
        return mean_loss, acc, params

    def _evaluate(self, params, dataset) -> tuple[float, float]:
        loss, _ = loss_and_grad(params, self.mlp, dataset.inputs, dataset.labels)
        preds, _ = forward(params, self.mlp, dataset.inputs)
        return loss, accuracy(preds, dataset.labels)

    def grad_norm(self, params) -> float:
        _, grads = loss_and_grad(params, self.mlp, self.train.inputs, self.train.labels)
        return grad_norm_sharpness(grads)

    def trace_estimate(self, params, probes, probe_rng) -> float:
        base = params.copy()
        x, y = self.train.inputs, self.train.labels

        def grad_fn(vec: np.ndarray) -> np.ndarray:
            _, grads = loss_and_grad(base.with_vector(vec), self.mlp, x, y)
            return grads.to_vector()

        w = base.to_vector()
        return hutchinson_trace(hvp_from_grad(grad_fn, w), w.size, probes, probe_rng)

    def summary_extras(self, params) -> dict:
        extras = {}
        if self.val is not None:
            val_loss, val_acc = self._evaluate(params, self.val)
            extras["final_val_loss"] = val_loss
            extras["final_val_accuracy"] = val_acc
        return extras


def _split(dataset: SyntheticDataset, cfg: RunConfig):
    if cfg.val_fraction == 0.0:
        return dataset, None
    n_val = max(1, int(round(cfg.val_fraction * dataset.n)))
    if n_val >= dataset.n:
        raise ValueError("validation split leaves no training data")
    order = rngmod.substream(cfg.seed, rngmod.STREAM_SPLIT).permutation(dataset.n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    make = lambda idx: SyntheticDataset(dataset.inputs[idx], dataset.labels[idx], dataset.class_count)
    return make(train_idx), make(val_idx)


def _build_task(cfg: RunConfig):
    task = cfg.task
    if isinstance(task, FrozenTask):
        return _FrozenRun(task)
    if isinstance(task, (QuadraticTask, DoubleWellTask)):
        return _LandscapeRun(task)
    if isinstance(task, (TwoMoonsTask, CsvTask)):
        return _DatasetRun(task, cfg)
    raise TypeError(f"unsupported task {task!r}")


# ---------------------------------------------------------------------------
# The run loop


def train_run(cfg: RunConfig, out_dir=None) -> RunArtifact:
    """Execute one seeded run and (optionally) write its directory.

    The loop is the usual epoch structure: mini-batch optimizer steps, then
    epoch metrics, then the stress update and whatever interventions the
    resulting regime demands. A non-finite loss or gradient finalizes the
    artifact with a diverged status instead of raising.
    """
    task = _build_task(cfg)
    optimizer = make_optimizer(cfg.optimizer, **cfg.effective_optimizer_params())
    controller = SalController(
        cfg.sal,
        noise_rng=rngmod.substream(cfg.seed, rngmod.STREAM_NOISE),
        plastic_rng=rngmod.substream(cfg.seed, rngmod.STREAM_PLASTIC),
        enabled=cfg.sal_enabled,
    )
    wrapped = wrap_with_sal(optimizer, controller)
    data_rng = rngmod.substream(cfg.seed, rngmod.STREAM_DATA_ORDER)
    probe_rng = rngmod.substream(cfg.seed, rngmod.STREAM_PROBES)

    params = task.init_params(cfg)
    rows: list[EpochRow] = []
    snapshots = [params.to_vector()] if cfg.record_trajectory else None
    status = STATUS_COMPLETED
    failure = None

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        try:
            mean_loss, acc, params = task.run_epoch(params, wrapped, data_rng)
            if not math.isfinite(mean_loss):
                raise NonFiniteError(f"epoch {epoch}: loss is {mean_loss}")
            grad_norm = task.grad_norm(params)
            trace = None
            if cfg.trace_every and epoch % cfg.trace_every == 0:
                trace = task.trace_estimate(params, cfg.trace_probes, probe_rng)
            metrics = EpochMetrics(loss=mean_loss, accuracy=acc, epoch=epoch)
            params = wrapped.end_epoch(params, metrics)
        except NonFiniteError as exc:
            status = STATUS_DIVERGED
            failure = str(exc)
            break
        rows.append(
            EpochRow(
                epoch=epoch,
                loss=mean_loss,
                accuracy=acc,
                stress=controller.state.value,
                grad_norm=grad_norm,
                trace=trace,
                wall_clock=time.perf_counter() - started,
            )
        )
        if snapshots is not None:
            snapshots.append(params.to_vector())

    summary = {
        "status": status,
        "epochs_run": len(rows),
        "seed": cfg.seed,
        "task_kind": cfg.task.kind,
        "event_counts": _event_counts(controller.events),
        "wall_clock_total": sum(row.wall_clock for row in rows),
        "wall_clock_per_epoch": [row.wall_clock for row in rows],
    }
    if failure:
        summary["failure"] = failure
    if rows:
        summary["final_loss"] = rows[-1].loss
        summary["final_accuracy"] = rows[-1].accuracy
        summary["final_grad_norm"] = rows[-1].grad_norm
    summary.update(task.summary_extras(params))

    artifact = RunArtifact(
        config_echo=render_config(cfg),
        rows=rows,
        events=list(controller.events),
        final_params=params,
        status=status,
        summary=summary,
        snapshots=np.asarray(snapshots) if snapshots is not None else None,
    )
    target = out_dir if out_dir is not None else cfg.out_dir
    if target is not None:
        write_run_dir(artifact, target)
    return artifact


def _event_counts(events) -> dict:
    counts: dict[str, int] = {}
    for event in events:
        counts[event.kind] = counts.get(event.kind, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# Run directories


def _fmt_float(x) -> str:
    return "" if x is None else repr(float(x))


def rows_to_csv(rows: list[EpochRow]) -> str:
    out = io.StringIO()
    out.write("epoch,loss,accuracy,stress,grad_norm,trace\n")
    for r in rows:
        out.write(
            f"{r.epoch},{_fmt_float(r.loss)},{_fmt_float(r.accuracy)},"
            f"{_fmt_float(r.stress)},{_fmt_float(r.grad_norm)},{_fmt_float(r.trace)}\n"
        )
    return out.getvalue()


def write_run_dir(artifact: RunArtifact, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(artifact.config_echo, encoding="utf-8")
    (out / "epochs.csv").write_text(rows_to_csv(artifact.rows), encoding="utf-8")
    with (out / "events.jsonl").open("w", encoding="utf-8") as fh:
        for event in artifact.events:
            fh.write(event.to_json() + "\n")
    save_checkpoint(artifact.final_params, out / "final.salckpt")
    (out / "summary.json").write_text(
        json.dumps(artifact.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if artifact.snapshots is not None:
        with (out / "snapshots.csv").open("w", encoding="utf-8") as fh:
            dim = artifact.snapshots.shape[1]
            fh.write("epoch," + ",".join(f"w{i}" for i in range(dim)) + "\n")
            for epoch, row in enumerate(artifact.snapshots):
                fh.write(str(epoch) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return out


def load_run_dir(path) -> RunArtifact:
    """Rebuild an artifact from a written run directory."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"{path} is not a run directory")
    rows = []
    csv_lines = (path / "epochs.csv").read_text(encoding="utf-8").splitlines()
    for line in csv_lines[1:]:
        epoch, loss, acc, stress, grad_norm, trace = line.split(",")
        rows.append(
            EpochRow(
                epoch=int(epoch),
                loss=float(loss),
                accuracy=float(acc),
                stress=float(stress),
                grad_norm=float(grad_norm),
                trace=float(trace) if trace else None,
            )
        )
    events = []
    events_path = path / "events.jsonl"
    if events_path.exists():
        for line in events_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(InterventionEvent.from_json(line))
    summary = json.loads((path / "summary.json").read_text(encoding="utf-8"))
    snapshots = None
    snap_path = path / "snapshots.csv"
    if snap_path.exists():
        lines = snap_path.read_text(encoding="utf-8").splitlines()[1:]
        snapshots = np.asarray([[float(v) for v in line.split(",")[1:]] for line in lines])
    return RunArtifact(
        config_echo=(path / "config.echo").read_text(encoding="utf-8"),
        rows=rows,
        events=events,
        final_params=load_checkpoint(path / "final.salckpt"),
        status=summary.get("status", STATUS_COMPLETED),
        summary=summary,
        snapshots=snapshots,
    )


# ---------------------------------------------------------------------------
# Comparison and sweeps


@dataclass
class CompareReport:
    epochs: int
    accuracy_gaps: list[float]
    final_loss_delta: float
    final_trace_delta: float | None
    baseline_events: dict
    treated_events: dict
    baseline_rows: list[EpochRow]
    treated_rows: list[EpochRow]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("epoch,baseline_accuracy,treated_accuracy,accuracy_gap\n")
        for b, t, gap in zip(self.baseline_rows, self.treated_rows, self.accuracy_gaps):
            out.write(f"{b.epoch},{b.accuracy!r},{t.accuracy!r},{gap!r}\n")
        return out.getvalue()

    def to_text(self) -> str:
        lines = [
            f"epochs compared: {self.epochs}",
            f"final loss delta (treated - baseline): {self.final_loss_delta!r}",
            f"mean accuracy gap: {float(np.mean(self.accuracy_gaps))!r}",
            f"final accuracy gap: {self.accuracy_gaps[-1]!r}",
        ]
        if self.final_trace_delta is not None:
            lines.append(f"final trace delta (treated - baseline): {self.final_trace_delta!r}")
        lines.append(f"baseline interventions: {self.baseline_events or 'none'}")
        lines.append(f"treated interventions: {self.treated_events or 'none'}")
        return "\n".join(lines)


def compare_runs(baseline: RunArtifact, treated: RunArtifact) -> CompareReport:
    """Epochwise comparison of two runs of the same task."""
    if len(baseline.rows) != len(treated.rows):
        raise ValueError(
            f"epoch count mismatch: {len(baseline.rows)} vs {len(treated.rows)}"
        )
    if not baseline.rows:
        raise ValueError("runs have no completed epochs to compare")
    if baseline.task_section() != treated.task_section():
        raise ValueError("runs describe different tasks; comparison is meaningless")
    gaps = [t.accuracy - b.accuracy for b, t in zip(baseline.rows, treated.rows)]

    def last_trace(rows):
        for row in reversed(rows):
            if row.trace is not None:
                return row.trace
        return None

    trace_b, trace_t = last_trace(baseline.rows), last_trace(treated.rows)
    return CompareReport(
        epochs=len(baseline.rows),
        accuracy_gaps=gaps,
        final_loss_delta=treated.rows[-1].loss - baseline.rows[-1].loss,
        final_trace_delta=None if trace_b is None or trace_t is None else trace_t - trace_b,
        baseline_events=_event_counts(baseline.events),
        treated_events=_event_counts(treated.events),
        baseline_rows=baseline.rows,
        treated_rows=treated.rows,
    )


def sweep(cfg: RunConfig, n_seeds: int, out_root=None) -> tuple[list[RunArtifact], dict]:
    """Run ``n_seeds`` independent seeds of one config; seeds are cfg.seed + i."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    root = Path(out_root) if out_root is not None else None
    artifacts = []
    for i in range(n_seeds):
        sub = replace(cfg, seed=cfg.seed + i, out_dir=None)
        target = root / f"seed_{i:03d}" if root is not None else None
        artifacts.append(train_run(sub, out_dir=target))

    per_seed = []
    for art in artifacts:
        entry = {
            "seed": art.summary["seed"],
            "status": art.status,
            "final_loss": art.summary.get("final_loss"),
            "final_accuracy": art.summary.get("final_accuracy"),
            "event_counts": art.summary["event_counts"],
        }
        if "escape" in art.summary:
            entry["escaped"] = art.summary["escape"]["escaped"]
        per_seed.append(entry)
    summary = {
        "seeds": n_seeds,
        "base_seed": cfg.seed,
        "task_kind": cfg.task.kind,
        "per_seed": per_seed,
        "completed": sum(1 for art in artifacts if art.status == STATUS_COMPLETED),
    }
    finals = [e["final_accuracy"] for e in per_seed if e["final_accuracy"] is not None]
    if finals:
        summary["mean_final_accuracy"] = float(np.mean(finals))
    losses = [e["final_loss"] for e in per_seed if e["final_loss"] is not None]
    if losses:
        summary["mean_final_loss"] = float(np.mean(losses))
    escapes = [e["escaped"] for e in per_seed if "escaped" in e]
    if escapes:
        summary["escape_rate"] = float(np.mean(escapes))
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
        (root / "sweep_summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return artifacts, summary


def derive_improvement_flags(rows: list[EpochRow], cfg) -> list[bool]:
    """Recover each epoch's improvement flag from logged metrics.

    Mirrors the controller's first-epoch convention (previous loss infinite,
    previous accuracy zero).
    """
    flags = []
    prev: EpochRow | None = None
    for row in rows:
        loss_ok = True if prev is None else (prev.loss - row.loss > cfg.min_loss_drop)
        if cfg.accuracy_condition_enabled:
            prev_acc = 0.0 if prev is None else prev.accuracy
            flags.append(loss_ok and (row.accuracy - prev_acc > cfg.min_accuracy_gain))
        else:
            flags.append(loss_ok)
        prev = row
    return flags
