import numpy as np
import pytest

from sal import EpochMetrics, Param, ParameterSet, SalConfig, SalController, reconstruct_stress_trace, substream


def _controller(cfg=None, enabled=True, seed=0):
    cfg = cfg or SalConfig()
    return SalController(
        cfg,
        noise_rng=substream(seed, "noise"),
        plastic_rng=substream(seed, "plastic"),
        enabled=enabled,
    )


def _params(n=6):
    return ParameterSet([Param("w", np.linspace(1.0, 2.0, n))])


def _stagnant(epoch):
    return EpochMetrics(loss=1.0, accuracy=0.0, epoch=epoch)


def test_warmup_suppresses_all_interventions():
    cfg = SalConfig(plastic_layer_count=1)
    ctl = _controller(cfg)
    params = _params()
    for epoch in range(1, 16):
        params = ctl.end_of_epoch(params, _stagnant(epoch))
    assert ctl.events == []
    assert ctl.state.value == pytest.approx(15 * cfg.stress_growth)


def test_first_interventions_fire_at_epoch_sixteen():
    cfg = SalConfig(plastic_layer_count=1)
    ctl = _controller(cfg)
    params = _params()
    for epoch in range(1, 17):
        params = ctl.end_of_epoch(params, _stagnant(epoch))
    kinds = [(e.epoch, e.kind) for e in ctl.events]
    assert kinds == [(16, "noise"), (16, "plastic")]
    assert ctl.state.value == 0.0
    assert ctl.events[-1].stress_after == 0.0
    assert ctl.events[-1].stress_before == pytest.approx(0.08)


def test_noise_fires_without_plastic_between_thresholds():
    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0, stress_growth=0.006, yield_threshold=0.02)
    ctl = _controller(cfg)
    params = _params()
    params = ctl.end_of_epoch(params, _stagnant(1))  # stress 0.006 > 0.005, below yield
    assert [e.kind for e in ctl.events] == ["noise"]
    assert ctl.snapshot is None


def test_disabled_controller_does_nothing():
    ctl = _controller(enabled=False)
    params = _params()
    out = ctl.end_of_epoch(params, _stagnant(1))
    assert out is params
    assert ctl.state.value == 0.0
    assert ctl.events == []


def test_improving_epochs_keep_stress_at_zero():
    cfg = SalConfig(accuracy_condition_enabled=False)
    ctl = _controller(cfg)
    params = _params()
    for epoch in range(1, 30):
        metrics = EpochMetrics(loss=10.0 - 0.1 * epoch, accuracy=0.0, epoch=epoch)
        params = ctl.end_of_epoch(params, metrics)
    assert ctl.state.value == 0.0
    assert ctl.events == []


def test_first_epoch_improvement_convention():
    # previous loss counts as infinite and previous accuracy as zero
    ctl = _controller(SalConfig(accuracy_condition_enabled=False))
    ctl.end_of_epoch(_params(), EpochMetrics(5.0, 0.0, 1))
    assert ctl.state.value == 0.0  # infinite drop counts as improvement

    ctl2 = _controller(SalConfig())
    ctl2.end_of_epoch(_params(), EpochMetrics(5.0, 0.0, 1))
    assert ctl2.state.value == pytest.approx(0.005)  # accuracy gain 0 fails the gate

    ctl3 = _controller(SalConfig())
    ctl3.end_of_epoch(_params(), EpochMetrics(5.0, 0.5, 1))
    assert ctl3.state.value == 0.0


def test_failed_deformation_reverts_next_epoch():
    # noise magnitudes zeroed so the yield snapshot equals the starting weights;
    # epoch 1 counts as improved (infinite previous loss), stagnation starts at 2
    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0, accuracy_condition_enabled=False,
                    base_noise=0.0, stress_noise_gain=0.0)
    ctl = _controller(cfg)
    params = _params()
    params = ctl.end_of_epoch(params, _stagnant(1))        # improved: stress stays 0
    params = ctl.end_of_epoch(params, _stagnant(2))        # stress 0.005, elastic
    deformed = ctl.end_of_epoch(params, _stagnant(3))      # stress 0.010 -> plastic
    assert [e.kind for e in ctl.events] == ["noise", "plastic"]
    assert not deformed.equal_values(params)
    # next epoch: loss 10% above the pre-event 1.0 -> revert, and nothing else fires
    restored = ctl.end_of_epoch(deformed, EpochMetrics(1.10, 0.0, 4))
    assert [(e.epoch, e.kind) for e in ctl.events][-1] == (4, "revert")
    assert restored.equal_values(params)
    assert ctl.snapshot is None


def test_tolerated_deformation_discards_snapshot_without_revert():
    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0, accuracy_condition_enabled=False)
    ctl = _controller(cfg)
    params = _params()
    for epoch in (1, 2, 3):
        params = ctl.end_of_epoch(params, _stagnant(epoch))  # plastic at epoch 3
    assert ctl.snapshot is not None
    ctl.end_of_epoch(params, EpochMetrics(1.01, 0.0, 4))   # within the 5% tolerance
    assert not any(e.kind == "revert" for e in ctl.events)
    assert ctl.snapshot is None


def test_revert_disabled_keeps_deformation():
    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0,
                    accuracy_condition_enabled=False, revert_enabled=False)
    ctl = _controller(cfg)
    params = _params()
    for epoch in (1, 2, 3):
        params = ctl.end_of_epoch(params, _stagnant(epoch))
    ctl.end_of_epoch(params, EpochMetrics(5.0, 0.0, 4))
    assert any(e.kind == "plastic" for e in ctl.events)
    assert not any(e.kind == "revert" for e in ctl.events)


def test_plastic_resets_stress_and_replaces_snapshot():
    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0,
                    accuracy_condition_enabled=False, revert_tolerance=1e9)
    ctl = _controller(cfg)
    params = _params()
    for epoch in (1, 2, 3):
        params = ctl.end_of_epoch(params, _stagnant(epoch))
    assert ctl.snapshot is not None and ctl.snapshot.event_epoch == 3
    params = ctl.end_of_epoch(params, _stagnant(4))  # tolerated; snapshot consumed
    assert ctl.snapshot is None
    params = ctl.end_of_epoch(params, _stagnant(5))  # stress back at yield -> new snapshot
    assert ctl.snapshot is not None and ctl.snapshot.event_epoch == 5


def test_optimizer_state_reset_switch():
    class SpyOptimizer:
        resets = 0

        def reset_state(self):
            self.resets += 1

    cfg = SalConfig(plastic_layer_count=1, warmup_epochs=0, stress_growth=0.01,
                    accuracy_condition_enabled=False, reset_optimizer_state=True)
    ctl = _controller(cfg)
    spy = SpyOptimizer()
    params = ctl.end_of_epoch(_params(), _stagnant(1), optimizer=spy)  # improved
    ctl.end_of_epoch(params, _stagnant(2), optimizer=spy)              # plastic
    assert spy.resets == 1


def test_reconstruct_stress_trace_matches_frozen_walk():
    cfg = SalConfig(plastic_layer_count=1)
    ctl = _controller(cfg)
    params = _params()
    for epoch in range(1, 31):
        params = ctl.end_of_epoch(params, _stagnant(epoch))
    logged = []
    ctl2 = _controller(cfg)
    params2 = _params()
    for epoch in range(1, 31):
        params2 = ctl2.end_of_epoch(params2, _stagnant(epoch))
        logged.append(ctl2.state.value)
    replayed = reconstruct_stress_trace([False] * 30, cfg)
    assert replayed == logged
