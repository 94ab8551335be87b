import pytest

from sal.configfile import parse_config, render_config
from sal.runconfig import DoubleWellTask, FrozenTask, TwoMoonsTask


def write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return path


def test_parse_minimal_two_moons(tmp_path):
    cfg = parse_config(write(tmp_path, """
[run]
epochs = 12
seed = 4

[task]
kind = two_moons
n = 100
noise_std = 0.2

[optimizer]
kind = adam
learning_rate = 1e-3
"""))
    assert isinstance(cfg.task, TwoMoonsTask)
    assert cfg.task.n == 100
    assert cfg.epochs == 12
    assert cfg.seed == 4
    assert cfg.optimizer == "adam"
    assert cfg.effective_optimizer_params()["learning_rate"] == 1e-3
    assert cfg.sal.accuracy_condition_enabled is True


def test_landscape_tasks_default_to_loss_only_improvement(tmp_path):
    cfg = parse_config(write(tmp_path, """
[task]
kind = double_well
"""))
    assert isinstance(cfg.task, DoubleWellTask)
    assert cfg.sal.accuracy_condition_enabled is False


def test_explicit_accuracy_condition_wins_on_landscapes(tmp_path):
    cfg = parse_config(write(tmp_path, """
[task]
kind = quadratic
curvatures = 1.0
start = 0.5

[sal]
accuracy_condition_enabled = true
"""))
    assert cfg.sal.accuracy_condition_enabled is True


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown key"):
        parse_config(write(tmp_path, """
[task]
kind = frozen
dmi = 3
"""))
    with pytest.raises(ValueError, match="unknown section"):
        parse_config(write(tmp_path, """
[task]
kind = frozen

[extras]
a = 1
"""))
    with pytest.raises(ValueError, match="unknown key"):
        parse_config(write(tmp_path, """
[task]
kind = frozen

[sal]
stress_groth = 0.1
"""))


def test_task_section_required(tmp_path):
    with pytest.raises(ValueError, match="task"):
        parse_config(write(tmp_path, "[run]\nepochs = 3\n"))


def test_unknown_task_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="kind"):
        parse_config(write(tmp_path, "[task]\nkind = spiral\n"))


def test_sal_section_parses_typed_values(tmp_path):
    cfg = parse_config(write(tmp_path, """
[task]
kind = frozen

[sal]
stress_growth = 0.001
warmup_epochs = 3
revert_enabled = false
plastic_noise_is_std = true
"""))
    assert cfg.sal.stress_growth == 0.001
    assert cfg.sal.warmup_epochs == 3
    assert cfg.sal.revert_enabled is False


def test_csv_task_paths_resolve_relative_to_config(tmp_path):
    (tmp_path / "data.csv").write_text("x,label\n1.0,0\n2.0,1\n")
    cfg = parse_config(write(tmp_path, """
[task]
kind = csv
path = data.csv
label_column = label
"""))
    assert cfg.task.path == str(tmp_path / "data.csv")


def test_render_parse_round_trip(tmp_path):
    original = parse_config(write(tmp_path, """
[run]
epochs = 9
seed = 2
sal_enabled = true

[task]
kind = double_well
sharp_width = 0.2
separation = 3.0
start = sharp

[optimizer]
kind = sgd
learning_rate = 0.01
momentum = 0.5

[sal]
min_loss_drop = 0.02
"""))
    echo = render_config(original)
    echoed = parse_config(write(tmp_path, echo))
    assert render_config(echoed) == echo
    assert echoed.task == original.task
    assert echoed.sal == original.sal
    assert echoed.optimizer == original.optimizer


def test_frozen_task_parses(tmp_path):
    cfg = parse_config(write(tmp_path, "[task]\nkind = frozen\ndim = 6\n"))
    assert isinstance(cfg.task, FrozenTask)
    assert cfg.task.dim == 6
