"""Stress-aware training control.

A scalar stress signal accumulates while training stagnates and decays while
it improves. Past a soft threshold the trainable weights get stress-scaled
Gaussian noise; past the yield threshold the trailing layers are contracted
and renoised ("plastic deformation") and the stress resets, with a snapshot
kept for recovery if the deformation backfires. The package ships the
controller, bare optimizers it wraps, a small dense-network and analytic
landscape testbed, verification metrics, an experiment harness, and a
scikit-learn style classifier wrapper.
"""

from .analysis import (
    PcaResult,
    SurfaceGrid,
    expected_loss_under_noise,
    grad_norm_sharpness,
    hutchinson_trace,
    hvp_from_grad,
    pca_project,
    stress_histogram,
    surface_grid,
    write_histogram_csv,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import SalConfig
from .control import SalController, reconstruct_stress_trace
from .data import SyntheticDataset, gen_two_moons, load_csv_dataset
from .errors import NonFiniteError
from .estimator import SalMlpClassifier
from .landscapes import (
    LandscapeSpec,
    Well,
    gaussian_wells,
    landscape_batch_loss,
    landscape_eval,
    landscape_loss,
    make_double_well,
    quadratic,
)
from .nn import ForwardCache, MlpSpec, accuracy, forward, init_mlp, loss_and_grad
from .optim import Adam, Adamax, Nadam, Optimizer, RmsProp, Sgd, make_optimizer, wrap_with_sal
from .params import Param, ParameterSet
from .perturb import (
    InterventionEvent,
    YieldSnapshot,
    inject_noise,
    noise_scale,
    plastic_deform,
    revert_to_yield,
    should_revert,
)
from .rng import substream
from .runconfig import (
    CsvTask,
    DoubleWellTask,
    FrozenTask,
    QuadraticTask,
    RunConfig,
    TwoMoonsTask,
)
from .runner import (
    CompareReport,
    EpochRow,
    RunArtifact,
    compare_runs,
    derive_improvement_flags,
    load_run_dir,
    sweep,
    train_run,
    write_run_dir,
)
from .stress import EpochMetrics, Regime, StressState, classify_regime, is_improvement, update_stress

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Adamax",
    "CompareReport",
    "CsvTask",
    "DoubleWellTask",
    "EpochMetrics",
    "EpochRow",
    "ForwardCache",
    "FrozenTask",
    "InterventionEvent",
    "LandscapeSpec",
    "MlpSpec",
    "Nadam",
    "NonFiniteError",
    "Optimizer",
    "Param",
    "ParameterSet",
    "PcaResult",
    "QuadraticTask",
    "Regime",
    "RmsProp",
    "RunArtifact",
    "RunConfig",
    "SalConfig",
    "SalController",
    "SalMlpClassifier",
    "Sgd",
    "StressState",
    "SurfaceGrid",
    "SyntheticDataset",
    "TwoMoonsTask",
    "Well",
    "YieldSnapshot",
    "accuracy",
    "classify_regime",
    "compare_runs",
    "derive_improvement_flags",
    "expected_loss_under_noise",
    "forward",
    "gaussian_wells",
    "gen_two_moons",
    "grad_norm_sharpness",
    "hutchinson_trace",
    "hvp_from_grad",
    "init_mlp",
    "inject_noise",
    "is_improvement",
    "landscape_batch_loss",
    "landscape_eval",
    "landscape_loss",
    "load_checkpoint",
    "load_csv_dataset",
    "load_run_dir",
    "loss_and_grad",
    "make_double_well",
    "make_optimizer",
    "noise_scale",
    "pca_project",
    "plastic_deform",
    "quadratic",
    "reconstruct_stress_trace",
    "revert_to_yield",
    "save_checkpoint",
    "should_revert",
    "stress_histogram",
    "substream",
    "surface_grid",
    "sweep",
    "train_run",
    "update_stress",
    "wrap_with_sal",
    "write_histogram_csv",
    "write_run_dir",
]
