"""End-to-end acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (visible with
``pytest -s`` or in captured output) and asserts both the criterion and its
stated runtime budget.
"""
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import sal
from sal import (
    SalConfig,
    StressState,
    hutchinson_trace,
    hvp_from_grad,
    landscape_batch_loss,
    landscape_eval,
    landscape_loss,
    pca_project,
    quadratic,
    update_stress,
)
from sal.configfile import parse_config
from sal.verify import rotated_bowl

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SHIPPED = sorted(CONFIGS.glob("*.ini"))


def _report(number: int, ok: bool, detail: str) -> None:
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} failed: {detail}"


@pytest.fixture(scope="module")
def shipped_runs():
    """One artifact per shipped config, reused across criteria."""
    runs = {}
    with pytest.warns(UserWarning):  # the frozen task has fewer entries than requested
        for path in SHIPPED:
            runs[path.name] = sal.train_run(parse_config(path))
    return runs


def test_criterion_01_stress_arithmetic():
    started = time.perf_counter()
    cfg = SalConfig()
    rng = np.random.default_rng(0xACCE)
    sequences = 10_000
    for _ in range(sequences):
        value = float(rng.uniform(0.0, 1.0))
        state = StressState(value, 1.0, 0)
        for improved in rng.integers(0, 2, size=int(rng.integers(1, 12))):
            before = state.value
            state = update_stress(state, bool(improved), cfg)
            assert 0.0 <= state.value <= 1.0
            expected = max(0.0, before - cfg.stress_decay) if improved else min(1.0, before + cfg.stress_growth)
            assert state.value == expected
            if state.value not in (0.0, 1.0):
                step = state.value - before
                target = -cfg.stress_decay if improved else cfg.stress_growth
                assert abs(step - target) <= math.ulp(max(before, state.value, 1.0))
    elapsed = time.perf_counter() - started
    _report(1, elapsed < 1.0, f"{sequences} sequences, clamps and exact steps held, {elapsed:.2f}s")


def test_criterion_02_noise_expansion_exact_on_quadratic():
    started = time.perf_counter()
    spec = quadratic((1.0, 2.0, 3.0))
    sigma, n = 0.1, 100_000
    base, _, trace = landscape_eval(spec, np.zeros(3))
    mean, std_error = sal.expected_loss_under_noise(
        landscape_loss(spec), np.zeros(3), sigma, n,
        np.random.default_rng(21), batch_loss_fn=landscape_batch_loss(spec),
    )
    predicted = 0.5 * sigma**2 * trace
    error = abs((mean - base) - predicted)
    elapsed = time.perf_counter() - started
    ok = error < 3.0 * std_error and elapsed < 2.0
    _report(2, ok, f"|MC - {predicted}| = {error:.2e} vs 3*SE = {3 * std_error:.2e}, {elapsed:.2f}s")


def test_criterion_03_trace_estimator():
    started = time.perf_counter()
    spec = quadratic((1.0, 2.0, 3.0))
    hvp = hvp_from_grad(lambda w: landscape_eval(spec, w)[1], np.zeros(3))
    estimate = hutchinson_trace(hvp, 3, 1000, np.random.default_rng(31))
    within = abs(estimate - 6.0) / 6.0 < 0.10

    # sign probes are exact on diagonal curvature, so convergence is shown on
    # a rotated bowl with the same eigenvalues
    matrix, exact = rotated_bowl()
    rng = np.random.default_rng(32)
    mean_errors = []
    for probes in (10, 100, 1000):
        errs = [abs(hutchinson_trace(lambda v: matrix @ v, 3, probes, rng) - exact) for _ in range(10)]
        mean_errors.append(float(np.mean(errs)))
    monotone = mean_errors[0] > mean_errors[1] > mean_errors[2]
    elapsed = time.perf_counter() - started
    ok = within and monotone and elapsed < 5.0
    _report(3, ok, f"estimate {estimate:.4f} vs 6.0; errors {mean_errors[0]:.3f}>{mean_errors[1]:.3f}>{mean_errors[2]:.3f}, {elapsed:.2f}s")


def test_criterion_04_gradient_correctness():
    started = time.perf_counter()
    worst = 0.0
    for draw in range(20):
        rng = np.random.default_rng(5000 + draw)
        widths = (int(rng.integers(2, 5)), int(rng.integers(2, 6)), int(rng.integers(2, 5)))
        use_ce = draw % 3 != 0
        spec = sal.MlpSpec(widths, activation="relu" if draw % 2 == 0 else "tanh",
                           output="softmax" if use_ce else "identity", seed=6000 + draw)
        params = sal.init_mlp(spec)
        x = rng.standard_normal((int(rng.integers(2, 7)), widths[0]))
        if use_ce:
            y, kind = rng.integers(0, widths[-1], x.shape[0]), "cross_entropy"
        else:
            y, kind = rng.standard_normal((x.shape[0], widths[-1])), "mse"
        _, grads = sal.loss_and_grad(params, spec, x, y, loss=kind)
        analytic = grads.to_vector()
        vec, h = params.to_vector(), 1e-5
        fd = np.zeros_like(vec)
        for i in range(vec.size):
            up, down = vec.copy(), vec.copy()
            up[i] += h
            down[i] -= h
            lu, _ = sal.loss_and_grad(params.with_vector(up), spec, x, y, loss=kind)
            ld, _ = sal.loss_and_grad(params.with_vector(down), spec, x, y, loss=kind)
            fd[i] = (lu - ld) / (2 * h)
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(fd)), 1e-8)
        worst = max(worst, float(np.max(np.abs(analytic - fd)) / scale))
    elapsed = time.perf_counter() - started
    ok = worst < 1e-4 and elapsed < 10.0
    _report(4, ok, f"max relative gradient error over 20 draws = {worst:.2e}, {elapsed:.2f}s")


def _final_hutchinson(artifact, probes=100, seed=0):
    task = parse_config(CONFIGS / "double_well_sal.ini").task
    spec = task.landscape()
    w = artifact.final_params["w"].values
    hvp = hvp_from_grad(lambda v: landscape_eval(spec, v)[1], w)
    return hutchinson_trace(hvp, w.size, probes, np.random.default_rng(seed))


def test_criterion_05_escape_experiment():
    started = time.perf_counter()
    sal_cfg = parse_config(CONFIGS / "double_well_sal.ini")
    base_cfg = parse_config(CONFIGS / "double_well_baseline.ini")
    seeds = 20
    escapes = {"sal": [], "base": []}
    traces = {"sal": [], "base": []}
    for i in range(seeds):
        a = sal.train_run(replace(sal_cfg, seed=sal_cfg.seed + i))
        b = sal.train_run(replace(base_cfg, seed=base_cfg.seed + i))
        escapes["sal"].append(a.summary["escape"]["escaped"])
        escapes["base"].append(b.summary["escape"]["escaped"])
        traces["sal"].append(_final_hutchinson(a, seed=100 + i))
        traces["base"].append(_final_hutchinson(b, seed=200 + i))
    sal_rate = float(np.mean(escapes["sal"]))
    base_rate = float(np.mean(escapes["base"]))
    sal_trace = float(np.mean(traces["sal"]))
    base_trace = float(np.mean(traces["base"]))
    elapsed = time.perf_counter() - started
    ok = base_rate <= 0.10 and sal_rate >= 0.70 and sal_trace < base_trace and elapsed < 60.0
    _report(5, ok, f"escape {sal_rate:.0%} vs {base_rate:.0%}; mean trace {sal_trace:.1f} vs {base_trace:.1f}, {elapsed:.1f}s")


def test_criterion_06_two_moons_parity():
    started = time.perf_counter()
    cfg = parse_config(CONFIGS / "two_moons.ini")
    assert cfg.epochs == 100 and cfg.hidden == (16, 16)
    assert cfg.optimizer == "adam"
    assert cfg.effective_optimizer_params()["learning_rate"] == 1e-3
    seeds = 10
    finals = {"sal": [], "base": []}
    interventions = 0
    for i in range(seeds):
        a = sal.train_run(replace(cfg, seed=cfg.seed + i, sal_enabled=True))
        b = sal.train_run(replace(cfg, seed=cfg.seed + i, sal_enabled=False))
        finals["sal"].append(a.rows[-1].accuracy)
        finals["base"].append(b.rows[-1].accuracy)
        interventions += len(a.events)
    sal_mean = float(np.mean(finals["sal"]))
    base_mean = float(np.mean(finals["base"]))
    elapsed = time.perf_counter() - started
    ok = sal_mean >= base_mean - 0.01 and interventions > 0 and elapsed < 120.0
    _report(6, ok, f"mean final accuracy {sal_mean:.4f} vs baseline {base_mean:.4f} "
                   f"({interventions} interventions across the arm), {elapsed:.1f}s")


def test_criterion_07_event_schedule(shipped_runs):
    started = time.perf_counter()
    art = shipped_runs["frozen.ini"]
    # stagnation from epoch 1 at growth 0.005: stress(e) = 0.005 e, so the
    # first post-warm-up epoch (16, stress 0.08) crosses both thresholds at
    # once; after each reset two stagnant epochs rebuild 0.01, giving events
    # every other epoch.
    noise_epochs = [e.epoch for e in art.events if e.kind == "noise"]
    plastic_epochs = [e.epoch for e in art.events if e.kind == "plastic"]
    expected = list(range(16, 31, 2))
    schedule_ok = noise_epochs == expected and plastic_epochs == expected
    resets_ok = all(e.stress_after == 0.0 for e in art.events if e.kind == "plastic")
    first_stress = [row.stress for row in art.rows[:15]]
    warmup_ok = first_stress == [pytest.approx(0.005 * e, abs=1e-12) for e in range(1, 16)]
    elapsed = time.perf_counter() - started
    ok = schedule_ok and resets_ok and warmup_ok and elapsed < 1.0
    _report(7, ok, f"first noise/plastic at 16, schedule {expected}, stress_after all zero, {elapsed:.2f}s")


def test_criterion_08_determinism(tmp_path):
    started = time.perf_counter()
    identical = True
    with pytest.warns(UserWarning):
        for path in SHIPPED:
            cfg = parse_config(path)
            first = tmp_path / f"{path.stem}_a"
            second = tmp_path / f"{path.stem}_b"
            sal.train_run(cfg, out_dir=first)
            sal.train_run(cfg, out_dir=second)
            for name in ("epochs.csv", "events.jsonl"):
                if (first / name).read_bytes() != (second / name).read_bytes():
                    identical = False
    elapsed = time.perf_counter() - started
    ok = identical and elapsed < 30.0
    _report(8, ok, f"epochs.csv and events.jsonl byte-identical for {len(SHIPPED)} configs, {elapsed:.1f}s")


def test_criterion_09_warmup_safety(shipped_runs):
    offenders = []
    for name, art in shipped_runs.items():
        cfg = parse_config(CONFIGS / name)
        assert cfg.sal.warmup_epochs == 15
        early = [e for e in art.events if e.epoch <= 15]
        if early:
            offenders.append((name, early))
    _report(9, not offenders, f"no interventions in epochs 1-15 across {len(shipped_runs)} shipped configs")


def test_criterion_10_pca_oracle():
    started = time.perf_counter()
    worst = 0.0
    for fixture in range(10):
        rng = np.random.default_rng(7000 + fixture)
        snapshots = rng.standard_normal((10, 50))
        result = pca_project(snapshots, k=3)
        centered = snapshots - snapshots.mean(axis=0)
        eigenvalues, vectors = np.linalg.eigh(centered.T @ centered / 9)
        order = np.argsort(eigenvalues)[::-1][:3]
        oracle = centered @ vectors[:, order]
        for col in range(3):
            ours, ref = result.projections[:, col], oracle[:, col]
            if np.dot(ours, ref) < 0:
                ref = -ref
            worst = max(worst, float(np.max(np.abs(ours - ref))))
    elapsed = time.perf_counter() - started
    ok = worst < 1e-6 and elapsed < 5.0
    _report(10, ok, f"max coordinate deviation vs dense eigensolver = {worst:.2e}, {elapsed:.2f}s")
