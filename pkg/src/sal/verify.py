"""Built-in verification fixtures for the second-order noise theory.

Two claims get checked numerically on analytic landscapes where the answer
is known exactly:

* the expected loss under isotropic Gaussian parameter noise rises by
  (sigma^2 / 2) * trace(Hessian) — exact on quadratics, second-order accurate
  near a Gaussian-well minimum with a computable quartic remainder;
* the randomized trace estimator converges to the analytic Hessian trace.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import expected_loss_under_noise, hutchinson_trace, hvp_from_grad
from .landscapes import Well, gaussian_wells, landscape_batch_loss, landscape_eval, landscape_loss, quadratic


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""


def check_quadratic_noise_expansion(seed: int = 20240, n_samples: int = 100_000) -> CheckResult:
    """Monte Carlo mean-loss increase vs sigma^2/2 * trace on a quadratic.

    The second-order expansion is exact here, so the only slack is the Monte
    Carlo standard error.
    """
    spec = quadratic((1.0, 2.0, 3.0))
    sigma = 0.1
    w = np.zeros(3)
    base, _, trace = landscape_eval(spec, w)
    mean, std_error = expected_loss_under_noise(
        landscape_loss(spec), w, sigma, n_samples, np.random.default_rng(seed),
        batch_loss_fn=landscape_batch_loss(spec),
    )
    predicted = 0.5 * sigma**2 * trace
    error = abs((mean - base) - predicted)
    bound = 3.0 * std_error
    return CheckResult(
        name="noise expansion, quadratic",
        passed=error < bound,
        measured=error,
        bound=bound,
        detail=f"MC increase {mean - base:.6g} vs predicted {predicted:.6g} (n={n_samples})",
    )


def check_wells_noise_expansion(seed: int = 20241, n_samples: int = 100_000) -> CheckResult:
    """Same comparison near a Gaussian-well minimum.

    Odd-order terms vanish at the minimum, so the expansion error is fourth
    order; the tolerance widens by a quartic remainder bound of
    3 * depth * dim^2 * sigma^4 / (8 * width^4), doubled for safety.
    """
    well = Well(np.zeros(3), depth=1.0, width=1.0)
    spec = gaussian_wells((well,))
    sigma = 0.02
    w = well.center
    base, _, trace = landscape_eval(spec, w)
    mean, std_error = expected_loss_under_noise(
        landscape_loss(spec), w, sigma, n_samples, np.random.default_rng(seed),
        batch_loss_fn=landscape_batch_loss(spec),
    )
    predicted = 0.5 * sigma**2 * trace
    quartic = 2.0 * 3.0 * well.depth * spec.dim**2 * sigma**4 / (8.0 * well.width**4)
    error = abs((mean - base) - predicted)
    bound = 3.0 * std_error + quartic
    return CheckResult(
        name="noise expansion, gaussian well",
        passed=error < bound,
        measured=error,
        bound=bound,
        detail=f"quartic remainder allowance {quartic:.3g}",
    )


def check_hutchinson_quadratic(seed: int = 20242, n_probes: int = 1000) -> CheckResult:
    """Trace estimate on curvatures (1, 2, 3): within 10% of the exact 6."""
    spec = quadratic((1.0, 2.0, 3.0))
    hvp = hvp_from_grad(lambda v: landscape_eval(spec, v)[1], np.zeros(3))
    estimate = hutchinson_trace(hvp, 3, n_probes, np.random.default_rng(seed))
    error = abs(estimate - 6.0) / 6.0
    return CheckResult(
        name="trace estimate, quadratic",
        passed=error < 0.10,
        measured=error,
        bound=0.10,
        detail=f"estimate {estimate:.4f} vs 6.0 at {n_probes} probes",
    )


def check_hutchinson_identity(seed: int = 20243, n_probes: int = 1000) -> CheckResult:
    """Identity Hessian in dimension 5: estimate within 10% of 5."""
    estimate = hutchinson_trace(lambda v: v, 5, n_probes, np.random.default_rng(seed))
    error = abs(estimate - 5.0) / 5.0
    return CheckResult(
        name="trace estimate, identity",
        passed=error < 0.10,
        measured=error,
        bound=0.10,
        detail=f"estimate {estimate:.4f} vs 5.0",
    )


def rotated_bowl(eigenvalues=(1.0, 2.0, 3.0), seed: int = 7) -> tuple[np.ndarray, float]:
    """Dense symmetric PSD matrix with known trace.

    Sign-probe trace estimates are exact on diagonal Hessians (probe entries
    square to one), so convergence behaviour only shows on a rotated bowl
    with off-diagonal curvature.
    """
    eigs = np.asarray(eigenvalues, dtype=np.float64)
    raw = np.random.default_rng(seed).standard_normal((eigs.size, eigs.size))
    q, _ = np.linalg.qr(raw)
    return q @ np.diag(eigs) @ q.T, float(np.sum(eigs))


def check_hutchinson_convergence(seed: int = 20244, repeats: int = 10) -> CheckResult:
    """Mean absolute estimation error shrinks as the probe count grows."""
    matrix, exact = rotated_bowl()
    rng = np.random.default_rng(seed)
    mean_errors = []
    for n_probes in (10, 100, 1000):
        errors = [
            abs(hutchinson_trace(lambda v: matrix @ v, matrix.shape[0], n_probes, rng) - exact)
            for _ in range(repeats)
        ]
        mean_errors.append(float(np.mean(errors)))
    monotone = mean_errors[0] > mean_errors[1] > mean_errors[2]
    return CheckResult(
        name="trace estimate convergence",
        passed=monotone,
        measured=mean_errors[-1],
        bound=mean_errors[0],
        detail=f"mean abs error over {repeats} repeats (rotated bowl): "
               + " > ".join(f"{e:.4f}" for e in mean_errors),
    )


def run_all_checks() -> list[CheckResult]:
    return [
        check_quadratic_noise_expansion(),
        check_wells_noise_expansion(),
        check_hutchinson_quadratic(),
        check_hutchinson_identity(),
        check_hutchinson_convergence(),
    ]


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name.ljust(width)}  measured={r.measured:.3g} bound={r.bound:.3g}  {r.detail}")
    return "\n".join(lines)
