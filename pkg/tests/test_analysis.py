import numpy as np
import pytest

from sal import (
    Param,
    ParameterSet,
    expected_loss_under_noise,
    grad_norm_sharpness,
    hutchinson_trace,
    hvp_from_grad,
    landscape_batch_loss,
    landscape_eval,
    landscape_loss,
    pca_project,
    quadratic,
    stress_histogram,
    surface_grid,
)
from sal.verify import rotated_bowl


def test_grad_norm_basic():
    assert grad_norm_sharpness(np.array([3.0, 4.0])) == 5.0
    assert grad_norm_sharpness(np.zeros(10)) == 0.0
    spec = quadratic((1.0, 2.0, 3.0))
    _, grad, _ = landscape_eval(spec, np.ones(3))
    assert grad_norm_sharpness(grad) == pytest.approx(np.sqrt(14.0), rel=1e-15)


def test_grad_norm_accepts_parameter_sets():
    grads = ParameterSet([Param("a", np.array([3.0])), Param("b", np.array([4.0]))])
    assert grad_norm_sharpness(grads) == 5.0


def test_hutchinson_dim_one_is_exact():
    estimate = hutchinson_trace(lambda v: 2.5 * v, 1, 3, np.random.default_rng(0))
    assert estimate == pytest.approx(2.5, rel=1e-15)


def test_hutchinson_quadratic_within_ten_percent():
    spec = quadratic((1.0, 2.0, 3.0))
    hvp = hvp_from_grad(lambda w: landscape_eval(spec, w)[1], np.zeros(3))
    estimate = hutchinson_trace(hvp, 3, 1000, np.random.default_rng(11))
    assert abs(estimate - 6.0) / 6.0 < 0.10


def test_hutchinson_identity_within_ten_percent():
    estimate = hutchinson_trace(lambda v: v, 5, 1000, np.random.default_rng(1))
    assert abs(estimate - 5.0) / 5.0 < 0.10


def test_hutchinson_error_shrinks_with_probes():
    matrix, exact = rotated_bowl()
    rng = np.random.default_rng(14)
    mean_errors = []
    for probes in (10, 100, 1000):
        errs = [abs(hutchinson_trace(lambda v: matrix @ v, 3, probes, rng) - exact) for _ in range(10)]
        mean_errors.append(np.mean(errs))
    assert mean_errors[0] > mean_errors[1] > mean_errors[2]


def test_hvp_from_grad_matches_matrix():
    matrix, _ = rotated_bowl((1.0, 4.0, 9.0), seed=3)
    grad_fn = lambda w: matrix @ w
    hvp = hvp_from_grad(grad_fn, np.zeros(3), step=1e-4)
    v = np.array([1.0, -2.0, 0.5])
    assert np.allclose(hvp(v), matrix @ v, atol=1e-9)


def test_expected_loss_zero_sigma():
    spec = quadratic((1.0, 2.0))
    mean, se = expected_loss_under_noise(landscape_loss(spec), np.array([0.5, 0.5]), 0.0, 100,
                                         np.random.default_rng(0))
    assert mean == landscape_eval(spec, np.array([0.5, 0.5]))[0]
    assert se == 0.0


def test_expected_loss_quadratic_second_order_identity():
    spec = quadratic((1.0, 2.0, 3.0))
    sigma = 0.1
    mean, se = expected_loss_under_noise(
        landscape_loss(spec), np.zeros(3), sigma, 100_000,
        np.random.default_rng(123), batch_loss_fn=landscape_batch_loss(spec),
    )
    predicted = 0.5 * sigma**2 * 6.0
    assert abs(mean - predicted) < 3.0 * se
    assert se < 5e-4


def test_expected_loss_loop_and_batch_paths_agree():
    spec = quadratic((2.0, 0.5))
    w = np.array([0.3, -0.7])
    loop_mean, loop_se = expected_loss_under_noise(landscape_loss(spec), w, 0.05, 500,
                                                   np.random.default_rng(9))
    batch_mean, batch_se = expected_loss_under_noise(landscape_loss(spec), w, 0.05, 500,
                                                     np.random.default_rng(9),
                                                     batch_loss_fn=landscape_batch_loss(spec))
    assert loop_mean == pytest.approx(batch_mean, rel=1e-12)
    assert loop_se == pytest.approx(batch_se, rel=1e-12)


def test_expected_loss_deterministic_per_seed():
    spec = quadratic((1.0, 1.0))
    args = (landscape_loss(spec), np.zeros(2), 0.2, 2000)
    m1, _ = expected_loss_under_noise(*args, np.random.default_rng(5))
    m2, _ = expected_loss_under_noise(*args, np.random.default_rng(5))
    assert m1 == m2


def test_surface_grid_center_and_orthogonality():
    spec = quadratic((1.0, 2.0, 3.0, 4.0))
    center = np.zeros(4)
    grid = surface_grid(landscape_loss(spec), center, seed=21, half_range=1.0, steps=9)
    mid = grid.values.shape[0] // 2
    assert grid.values[mid, mid] == landscape_eval(spec, center)[0]
    d1, d2 = grid.directions
    assert abs(d1 @ d2) < 1e-10
    assert np.linalg.norm(d1) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(d2) == pytest.approx(1.0, abs=1e-12)


def test_surface_grid_is_exact_paraboloid_for_quadratics():
    curv = np.array([1.0, 2.0, 3.0, 4.0])
    spec = quadratic(curv)
    grid = surface_grid(landscape_loss(spec), np.zeros(4), seed=4, half_range=0.8, steps=7)
    d1, d2 = grid.directions
    for i, a in enumerate(grid.offsets):
        for j, b in enumerate(grid.offsets):
            point = a * d1 + b * d2
            expected = 0.5 * float(curv @ (point * point))
            assert grid.values[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_surface_grid_symmetry_at_minimum():
    spec = quadratic((1.0, 5.0, 0.5))
    grid = surface_grid(landscape_loss(spec), np.zeros(3), seed=8, half_range=1.0, steps=11)
    assert np.max(np.abs(grid.values - grid.values[::-1, ::-1])) < 1e-10


def test_surface_grid_rejects_even_steps():
    spec = quadratic((1.0,))
    with pytest.raises(ValueError):
        surface_grid(landscape_loss(spec), np.zeros(1), 0, 1.0, 10)


def test_surface_grid_csv(tmp_path):
    spec = quadratic((1.0, 2.0))
    grid = surface_grid(landscape_loss(spec), np.zeros(2), seed=2, half_range=0.5, steps=3)
    out = tmp_path / "surface.csv"
    grid.write_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,beta,loss"
    assert len(lines) == 1 + 9


def test_pca_line_is_rank_one():
    rng = np.random.default_rng(0)
    direction = rng.standard_normal(20)
    ts = np.linspace(-2, 2, 12)
    snapshots = np.outer(ts, direction)
    result = pca_project(snapshots, k=3)
    assert result.rank_deficient
    assert result.explained_variance_ratio[0] > 0.9999


def test_pca_plane_is_rank_two():
    rng = np.random.default_rng(1)
    basis = rng.standard_normal((2, 30))
    coords = rng.standard_normal((15, 2))
    snapshots = coords @ basis
    result = pca_project(snapshots, k=3)
    assert float(np.sum(result.explained_variance_ratio[:2])) > 0.9999


def _dense_pca_oracle(snapshots, k):
    centered = snapshots - snapshots.mean(axis=0)
    cov = centered.T @ centered / (snapshots.shape[0] - 1)
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1][:k]
    return centered @ vectors[:, order], eigenvalues[order]


@pytest.mark.parametrize("fixture_seed", range(10))
def test_pca_matches_dense_eigendecomposition(fixture_seed):
    rng = np.random.default_rng(4000 + fixture_seed)
    snapshots = rng.standard_normal((10, 50))
    result = pca_project(snapshots, k=3)
    oracle, _ = _dense_pca_oracle(snapshots, 3)
    assert result.projections.shape == (10, 3)
    for col in range(3):
        ours, ref = result.projections[:, col], oracle[:, col]
        flipped = -ref if np.dot(ours, ref) < 0 else ref
        assert np.max(np.abs(ours - flipped)) < 1e-6


def test_pca_components_orthonormal():
    rng = np.random.default_rng(77)
    snapshots = rng.standard_normal((12, 40))
    result = pca_project(snapshots, k=3)
    gram = result.components @ result.components.T
    assert np.max(np.abs(gram - np.eye(3))) < 1e-8


def test_pca_requires_enough_snapshots():
    with pytest.raises(ValueError):
        pca_project(np.zeros((3, 8)), k=3)


def test_stress_histogram_all_zero_trace():
    edges, counts = stress_histogram(np.zeros(25), 10, max_stress=1.0)
    assert counts[0] == 25
    assert counts.sum() == 25
    assert edges.shape == (11,)


def test_stress_histogram_counts_sum_to_epochs():
    rng = np.random.default_rng(2)
    values = rng.uniform(0, 1, 137)
    _, counts = stress_histogram(values, 7)
    assert counts.sum() == 137


def test_stress_histogram_uniform_values_spread_evenly():
    n, bins = 10_000, 10
    values = np.random.default_rng(3).uniform(0, 1, n)
    _, counts = stress_histogram(values, bins)
    bound = 5 * np.sqrt(n / bins)
    assert np.all(np.abs(counts - n / bins) < bound)


def test_stress_histogram_rejects_out_of_range():
    with pytest.raises(ValueError):
        stress_histogram(np.array([0.5, 1.5]), 4, max_stress=1.0)


def test_histogram_csv(tmp_path):
    from sal import write_histogram_csv

    edges, counts = stress_histogram(np.array([0.1, 0.1, 0.9]), 2)
    out = tmp_path / "hist.csv"
    write_histogram_csv(edges, counts, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "bin_low,bin_high,count"
    assert lines[1] == "0.0,0.5,2"
    assert lines[2] == "0.5,1.0,1"
