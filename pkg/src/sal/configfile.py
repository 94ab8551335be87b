"""Flat INI run configs: parsing with strict key checking, canonical echoing.

The echo written into every run directory is produced by :func:`render_config`
from the resolved values, so two runs configured the same way echo the same
bytes no matter how their input files were formatted.
"""
from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .config import SalConfig
from .runconfig import (
    LANDSCAPE_KINDS,
    CsvTask,
    DoubleWellTask,
    FrozenTask,
    QuadraticTask,
    RunConfig,
    TwoMoonsTask,
)

_RUN_KEYS = {
    "epochs", "batch_size", "seed", "sal_enabled", "monitor", "val_fraction",
    "out_dir", "record_trajectory", "trace_every", "trace_probes",
}
_MODEL_KEYS = {"hidden", "activation", "seed"}
_OPTIMIZER_KEYS = {"kind", "learning_rate", "momentum", "beta1", "beta2", "epsilon", "rho"}
_SAL_KEYS = {f.name for f in fields(SalConfig)}
_BOOL_SAL_KEYS = {
    "plastic_noise_is_std", "accuracy_condition_enabled", "revert_enabled", "reset_optimizer_state",
}
_INT_SAL_KEYS = {"warmup_epochs", "plastic_layer_count", "revert_patience"}

_TASK_KEYS = {
    "two_moons": {"n", "noise_std"},
    "csv": {"path", "label_column", "standardize"},
    "quadratic": {"curvatures", "start"},
    "double_well": {
        "sharp_width", "flat_width", "separation", "sharp_depth", "flat_depth", "dim", "start",
    },
    "frozen": {"dim"},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _check_keys(section: str, present, allowed) -> None:
    unknown = sorted(set(present) - allowed)
    if unknown:
        raise ValueError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def parse_config(path) -> RunConfig:
    """Read a run config file; unknown sections or keys are errors."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with path.open("r", encoding="utf-8") as fh:
        parser.read_file(fh)

    known_sections = {"run", "task", "model", "optimizer", "sal"}
    unknown = sorted(set(parser.sections()) - known_sections)
    if unknown:
        raise ValueError(f"{path}: unknown section(s): {', '.join(unknown)}")
    if "task" not in parser:
        raise ValueError(f"{path}: a [task] section is required")

    task_sec = parser["task"]
    kind = task_sec.get("kind", "").strip()
    if kind not in _TASK_KEYS:
        raise ValueError(f"{path}: [task] kind must be one of {sorted(_TASK_KEYS)}, got {kind!r}")
    _check_keys("task", (k for k in task_sec if k != "kind"), _TASK_KEYS[kind])

    if kind == "two_moons":
        task = TwoMoonsTask(n=task_sec.getint("n", 200), noise_std=task_sec.getfloat("noise_std", 0.15))
    elif kind == "csv":
        if "path" not in task_sec or "label_column" not in task_sec:
            raise ValueError(f"{path}: csv task needs 'path' and 'label_column'")
        csv_path = Path(task_sec["path"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        task = CsvTask(
            path=str(csv_path),
            label_column=task_sec["label_column"],
            standardize=task_sec.getboolean("standardize", True),
        )
    elif kind == "quadratic":
        task = QuadraticTask(
            curvatures=_floats(task_sec.get("curvatures", "1.0")),
            start=_floats(task_sec.get("start", "1.0")),
        )
    elif kind == "double_well":
        start_raw = task_sec.get("start", "sharp").strip()
        start = start_raw if start_raw in ("sharp", "flat") else _floats(start_raw)
        task = DoubleWellTask(
            sharp_width=task_sec.getfloat("sharp_width", 0.1),
            flat_width=task_sec.getfloat("flat_width", 1.0),
            separation=task_sec.getfloat("separation", 2.0),
            sharp_depth=task_sec.getfloat("sharp_depth", 1.0),
            flat_depth=task_sec.getfloat("flat_depth", 1.0),
            dim=task_sec.getint("dim", 2),
            start=start,
        )
    else:
        task = FrozenTask(dim=task_sec.getint("dim", 4))

    run_sec = parser["run"] if "run" in parser else {}
    if run_sec:
        _check_keys("run", run_sec, _RUN_KEYS)

    sal_kwargs = {}
    if "sal" in parser:
        sal_sec = parser["sal"]
        _check_keys("sal", sal_sec, _SAL_KEYS)
        for key in sal_sec:
            if key in _BOOL_SAL_KEYS:
                sal_kwargs[key] = sal_sec.getboolean(key)
            elif key in _INT_SAL_KEYS:
                sal_kwargs[key] = sal_sec.getint(key)
            else:
                sal_kwargs[key] = sal_sec.getfloat(key)
    # Landscapes carry no accuracy signal; only an explicit setting keeps the condition on.
    if kind in LANDSCAPE_KINDS and "accuracy_condition_enabled" not in sal_kwargs:
        sal_kwargs["accuracy_condition_enabled"] = False
    sal = SalConfig(**sal_kwargs)

    opt_kind, opt_params = "adam", {}
    if "optimizer" in parser:
        opt_sec = parser["optimizer"]
        _check_keys("optimizer", opt_sec, _OPTIMIZER_KEYS)
        opt_kind = opt_sec.get("kind", "adam")
        for key in opt_sec:
            if key != "kind":
                opt_params[key] = opt_sec.getfloat(key)

    hidden, activation, model_seed = (16, 16), "relu", None
    if "model" in parser:
        model_sec = parser["model"]
        _check_keys("model", model_sec, _MODEL_KEYS)
        if "hidden" in model_sec:
            hidden = tuple(int(h) for h in model_sec["hidden"].split(",") if h.strip())
        activation = model_sec.get("activation", "relu")
        if "seed" in model_sec:
            model_seed = model_sec.getint("seed")

    def _get(key, cast, default):
        if not run_sec or key not in run_sec:
            return default
        return cast(run_sec[key])

    return RunConfig(
        task=task,
        epochs=_get("epochs", int, 50),
        batch_size=_get("batch_size", int, 64),
        seed=_get("seed", int, 0),
        sal=sal,
        sal_enabled=_get("sal_enabled", lambda v: v.strip().lower() in ("1", "true", "yes", "on"), True),
        optimizer=opt_kind,
        optimizer_params=opt_params,
        hidden=hidden,
        activation=activation,
        model_seed=model_seed,
        monitor=_get("monitor", str, "train"),
        val_fraction=_get("val_fraction", float, 0.0),
        out_dir=_get("out_dir", str, None),
        record_trajectory=_get("record_trajectory", lambda v: v.strip().lower() in ("1", "true", "yes", "on"), False),
        trace_every=_get("trace_every", int, 0),
        trace_probes=_get("trace_probes", int, 25),
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_config(cfg: RunConfig) -> str:
    """Canonical INI text for the resolved configuration."""
    lines = ["[run]"]
    lines.append(f"epochs = {cfg.epochs}")
    lines.append(f"batch_size = {cfg.batch_size}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"sal_enabled = {_fmt(cfg.sal_enabled)}")
    lines.append(f"monitor = {cfg.monitor}")
    lines.append(f"val_fraction = {_fmt(cfg.val_fraction)}")
    lines.append(f"record_trajectory = {_fmt(cfg.record_trajectory)}")
    lines.append(f"trace_every = {cfg.trace_every}")
    lines.append(f"trace_probes = {cfg.trace_probes}")

    lines.append("")
    lines.append("[task]")
    lines.append(f"kind = {cfg.task.kind}")
    task = cfg.task
    if isinstance(task, TwoMoonsTask):
        lines.append(f"n = {task.n}")
        lines.append(f"noise_std = {_fmt(task.noise_std)}")
    elif isinstance(task, CsvTask):
        lines.append(f"path = {task.path}")
        lines.append(f"label_column = {task.label_column}")
        lines.append(f"standardize = {_fmt(task.standardize)}")
    elif isinstance(task, QuadraticTask):
        lines.append("curvatures = " + ",".join(repr(c) for c in task.curvatures))
        lines.append("start = " + ",".join(repr(s) for s in task.start))
    elif isinstance(task, DoubleWellTask):
        for key in ("sharp_width", "flat_width", "separation", "sharp_depth", "flat_depth"):
            lines.append(f"{key} = {_fmt(getattr(task, key))}")
        lines.append(f"dim = {task.dim}")
        start = task.start if isinstance(task.start, str) else ",".join(repr(s) for s in task.start)
        lines.append(f"start = {start}")
    elif isinstance(task, FrozenTask):
        lines.append(f"dim = {task.dim}")

    if task.kind in ("two_moons", "csv"):
        lines.append("")
        lines.append("[model]")
        lines.append("hidden = " + ",".join(str(h) for h in cfg.hidden))
        lines.append(f"activation = {cfg.activation}")
        lines.append(f"seed = {cfg.seed if cfg.model_seed is None else cfg.model_seed}")

    lines.append("")
    lines.append("[optimizer]")
    lines.append(f"kind = {cfg.optimizer}")
    for key, value in sorted(cfg.effective_optimizer_params().items()):
        lines.append(f"{key} = {_fmt(value)}")

    lines.append("")
    lines.append("[sal]")
    for f in fields(SalConfig):
        lines.append(f"{f.name} = {_fmt(getattr(cfg.sal, f.name))}")
    lines.append("")
    return "\n".join(lines)
