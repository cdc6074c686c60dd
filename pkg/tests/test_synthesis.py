import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frodo.clements import decompose, identity_plan, reconstruct
from frodo.linalg import dft_matrix, gate_metrics, haar_random_unitary, unitarity_error
from frodo.model import PhysicalConfig, layer_matrix, length_for_kappa
from frodo.synthesis import (
    drive_settings,
    layer_specs,
    leaked_probability,
    log_grid,
    logical_settings,
    propagate,
    sweep_lengths,
    synthesize,
    threshold_length,
)

# Regression bound for B_c >= 1 - c sqrt(1 - F) on the DFT sweeps (N = 2..10,
# default grid).  Measured worst case 1.028; frozen with a little headroom.
BC_FIDELITY_C = 1.05


@pytest.mark.parametrize("length", [1e-4, 0.01, 0.5])
def test_identity_plan_is_exact(length):
    cfg = PhysicalConfig(interaction_length_m=length)
    res = synthesize(identity_plan(2), cfg, np.eye(2))
    assert res.metrics.fidelity == pytest.approx(1, abs=1e-14)
    assert res.metrics.success_prob == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 10])
def test_ideal_limit_matches_reconstruct(n):
    cfg = PhysicalConfig()
    rng = np.random.default_rng(n)
    for _ in range(10):
        v = haar_random_unitary(n, rng)
        plan = decompose(v)
        w = synthesize(plan, cfg, v, kappa_value=1e12, keep_full=False).projected
        assert np.max(np.abs(w - reconstruct(plan))) <= 1e-8
        assert np.max(np.abs(w - v)) <= 1e-8
        assert gate_metrics(v, synthesize(plan, cfg, v, kappa_value=1e8).projected).fidelity >= 1 - 1e-10


def test_full_matrix_is_dense_layer_product():
    cfg = PhysicalConfig(interaction_length_m=0.02)
    v = haar_random_unitary(4, 2)
    plan = decompose(v)
    res = synthesize(plan, cfg, v)
    device = drive_settings(plan, cfg)
    u = np.eye(64, dtype=complex)
    for b in device.blocks:
        u = layer_matrix(cfg, b, 4) @ u
    offset = cfg.window_offset_for(4)
    phases = np.ones(64, dtype=complex)
    phases[offset:offset + 4] = np.exp(1j * np.asarray(device.final_phases))
    u = phases[:, None] * u
    assert np.max(np.abs(res.full - u)) <= 1e-13
    assert np.array_equal(res.projected, res.full[offset:offset + 4, offset:offset + 4])
    assert len(layer_specs(device, cfg)) == len(plan.blocks)


def test_stored_metrics_recompute(rng):
    v = haar_random_unitary(5, rng)
    res = synthesize(decompose(v), PhysicalConfig(interaction_length_m=0.05), v)
    again = gate_metrics(v, res.projected)
    assert abs(again.fidelity - res.metrics.fidelity) <= 1e-12
    assert abs(again.success_prob - res.metrics.success_prob) <= 1e-12
    assert abs(again.uniformity - res.metrics.uniformity) <= 1e-12


@given(st.integers(2, 8), st.integers(0, 10_000), st.floats(1e-4, 1.0))
@settings(max_examples=30, deadline=None)
def test_unitarity_and_leakage_accounting(n, seed, length):
    cfg = PhysicalConfig(interaction_length_m=length)
    v = haar_random_unitary(n, seed)
    res = synthesize(decompose(v), cfg, v)
    assert unitarity_error(res.full) <= 1e-10
    assert res.metrics.success_prob <= 1 + 1e-10
    leaked = leaked_probability(res.full, cfg, n)
    assert abs((1 - res.metrics.success_prob) - leaked) <= 1e-10


@given(st.integers(1, 9), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_drive_settings_round_trip(n, seed):
    cfg = PhysicalConfig()
    plan = decompose(haar_random_unitary(n, seed))
    back = logical_settings(drive_settings(plan, cfg), cfg)
    a, b = plan.angles(), back.angles()
    assert np.max(np.abs(np.angle(np.exp(1j * (a - b))))) <= 1e-10


def test_slab_matches_full_propagation():
    cfg = PhysicalConfig(interaction_length_m=0.01)
    plan = decompose(dft_matrix(6))
    offset = cfg.window_offset_for(6)
    full = propagate(plan, cfg, full=True)
    slab = propagate(plan, cfg)
    assert np.allclose(full[:, offset:offset + 6], slab, atol=1e-15)


def test_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        synthesize(identity_plan(3), PhysicalConfig(), np.eye(4))


# -- sweeps and thresholds ------------------------------------------------------

def test_threshold_examples():
    assert threshold_length([(1, 0.5), (2, 0.995), (3, 0.999)], 0.99) == 2
    assert threshold_length([(1, 0.1), (2, 0.5), (3, 0.9)], 0.99) is None
    assert threshold_length([(1, 0.995), (2, 0.98), (3, 0.999)], 0.99) == 3
    assert threshold_length([(1, 0.99)], 0.99) == 1
    with pytest.raises(ValueError):
        threshold_length([], 0.5)


def test_sweep_single_identity():
    out = sweep_lengths(np.eye(3), PhysicalConfig(), [0.05])
    assert len(out) == 1
    length, m = out[0]
    assert length == 0.05
    assert m.fidelity == pytest.approx(1, abs=1e-14)
    assert m.success_prob == pytest.approx(1, abs=1e-14)
    assert m.uniformity == pytest.approx(3**-0.5, abs=1e-14)


def test_sweep_sorted_and_validated():
    out = sweep_lengths(dft_matrix(3), PhysicalConfig(), [0.3, 0.01, 0.1])
    assert [x[0] for x in out] == [0.01, 0.1, 0.3]
    with pytest.raises(ValueError):
        sweep_lengths(dft_matrix(3), PhysicalConfig(), [])
    with pytest.raises(ValueError):
        sweep_lengths(dft_matrix(3), PhysicalConfig(), [0.0, 0.1])


def test_log_grid():
    g = log_grid()
    assert g.size == 200 and g[0] == pytest.approx(1e-4) and g[-1] == pytest.approx(1.0)
    assert np.all(np.diff(np.log(g)) > 0)


def test_dft3_sweep_improves_with_length():
    out = sweep_lengths(dft_matrix(3), PhysicalConfig(), log_grid())
    f = np.array([m.fidelity for _, m in out])
    p = np.array([m.success_prob for _, m in out])
    assert f[-1] > 0.999 and p[-1] > 0.999
    assert f[-20:].mean() > f[:20].mean() and p[-20:].mean() > p[:20].mean()


def test_dft10_crossings():
    out = sweep_lengths(dft_matrix(10), PhysicalConfig(), log_grid())
    f_th = threshold_length([(l, m.fidelity) for l, m in out], 0.99)
    b_th = threshold_length([(l, m.uniformity) for l, m in out], 0.99)
    assert 0.15 <= f_th <= 0.6
    assert 0.1 <= b_th <= 0.4


@pytest.mark.parametrize("n", range(2, 11))
def test_uniformity_follows_fidelity_for_dft(n):
    for _, m in sweep_lengths(dft_matrix(n), PhysicalConfig(), log_grid()):
        assert m.uniformity >= 1 - BC_FIDELITY_C * np.sqrt(max(1 - m.fidelity, 0.0)) - 1e-12


def test_large_kappa_reached_by_length():
    cfg = PhysicalConfig()
    length = length_for_kappa(cfg, 1e8)
    v = dft_matrix(4)
    m = synthesize(decompose(v), cfg.with_length(length), v).metrics
    assert 1 - m.fidelity <= 1e-10
