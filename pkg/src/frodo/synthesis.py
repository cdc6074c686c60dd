"""Compile a mesh plan into cascaded FRODO layers and score the projected gate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clements import TWO_PI, MeshPlan, RotationBlock, decompose, validate_plan
from .linalg import GateMetrics, gate_metrics
from .model import LayerSpec, PhysicalConfig, apply_ladder, kappa, ladder_blocks, layer_spec


@dataclass(frozen=True)
class SynthesisResult:
    projected: np.ndarray
    full: np.ndarray | None
    metrics: GateMetrics
    kappa: float
    config_echo: PhysicalConfig
    plan_echo: MeshPlan


def _check_dims(plan: MeshPlan, target) -> np.ndarray:
    validate_plan(plan)
    target = np.asarray(target, dtype=complex)
    if target.shape != (plan.dim, plan.dim):
        raise ValueError(f"plan is {plan.dim}-dimensional but target has shape {target.shape}")
    return target


def drive_settings(plan: MeshPlan, config: PhysicalConfig) -> MeshPlan:
    """Translate an ideal mesh plan into per-layer device settings.

    A far-detuned layer still applies its phase to every bin riding the same
    transverse mode as the targeted lower bin.  Those extra diagonal phases
    are pushed forward: a phase (a, b) on a pair entering a rotation equals a
    common output phase b after a rotation with phi shifted by a - b.  The
    leftover diagonal is removed from the final phase layer, so the device
    cascade equals ``reconstruct(plan)`` exactly in the large-mismatch limit.
    """
    validate_plan(plan)
    parity = (config.window_offset_for(plan.dim) + np.arange(plan.dim)) % 2
    acc = np.zeros(plan.dim)  # accumulated stray phase per computational bin
    blocks = []
    for b in plan.blocks:
        lo = b.pair_low
        phi = b.phi - acc[lo] + acc[lo + 1]
        same_mode = parity == parity[lo]
        acc[same_mode] += phi
        acc[lo] = acc[lo + 1]
        blocks.append(RotationBlock(lo, b.theta, float(phi % TWO_PI)))
    final = (np.asarray(plan.final_phases) - acc) % TWO_PI
    return MeshPlan(plan.dim, tuple(blocks), tuple(final))


def logical_settings(device: MeshPlan, config: PhysicalConfig) -> MeshPlan:
    """Inverse of ``drive_settings``."""
    validate_plan(device)
    parity = (config.window_offset_for(device.dim) + np.arange(device.dim)) % 2
    acc = np.zeros(device.dim)
    blocks = []
    for b in device.blocks:
        lo = b.pair_low
        phi = b.phi + acc[lo] - acc[lo + 1]
        acc[parity == parity[lo]] += b.phi
        acc[lo] = acc[lo + 1]
        blocks.append(RotationBlock(lo, b.theta, float(phi % TWO_PI)))
    final = (np.asarray(device.final_phases) + acc) % TWO_PI
    return MeshPlan(device.dim, tuple(blocks), tuple(final))


def layer_specs(plan: MeshPlan, config: PhysicalConfig, kappa_value: float | None = None) -> list[LayerSpec]:
    """Layer cascade for an already-compiled (device-setting) plan."""
    k = kappa(config) if kappa_value is None else float(kappa_value)
    return [layer_spec(config, b, plan.dim, k) for b in plan.blocks]


def propagate(plan: MeshPlan, config: PhysicalConfig, kappa_value: float | None = None,
              full: bool = False, compiled: bool = False) -> np.ndarray:
    """Cascade all layers of ``plan`` and its final phase layer.

    ``plan`` is an ideal mesh plan and is passed through ``drive_settings``
    first, unless ``compiled`` says it already holds device settings.

    Returns the full M x M transfer matrix if ``full``; otherwise only the
    M x N slab of columns fed by the computational bins, which is all that
    the projected gate depends on.
    """
    size = config.ambient_bins
    offset = config.window_offset_for(plan.dim)
    window = slice(offset, offset + plan.dim)
    if full:
        state = np.eye(size, dtype=complex)
    else:
        state = np.zeros((size, plan.dim), dtype=complex)
        state[window] = np.eye(plan.dim)
    if not compiled:
        plan = drive_settings(plan, config)
    k = kappa(config) if kappa_value is None else float(kappa_value)
    for m, f, phi in zip(*layer_stack(plan, config, k)):
        state = apply_ladder(state, m, f, phi)
    state[window] *= np.exp(1j * np.asarray(plan.final_phases))[:, None]
    return state


def layer_stack(device: MeshPlan, config: PhysicalConfig, kappa_value: float):
    """(ambient targets, rung blocks, phases) for every layer of a device plan."""
    offset = config.window_offset_for(device.dim)
    ms = np.array([b.pair_low + offset for b in device.blocks], dtype=int)
    thetas = np.array([b.theta for b in device.blocks])
    phis = np.array([b.phi for b in device.blocks])
    if not len(ms):
        return ms, np.zeros((0, config.ambient_bins // 2, 2, 2), complex), phis
    return ms, ladder_blocks(config.ambient_bins, ms, thetas, phis, kappa_value), phis


def project(state: np.ndarray, config: PhysicalConfig, n: int) -> np.ndarray:
    offset = config.window_offset_for(n)
    rows = slice(offset, offset + n)
    cols = rows if state.shape[1] == config.ambient_bins else slice(None)
    return state[rows, cols].copy()


def projected_gate(plan: MeshPlan, config: PhysicalConfig, kappa_value: float | None = None) -> np.ndarray:
    return project(propagate(plan, config, kappa_value), config, plan.dim)


def synthesize(plan: MeshPlan, config: PhysicalConfig, target, kappa_value: float | None = None,
               keep_full: bool = True) -> SynthesisResult:
    """Build the layer cascade for ``plan`` and score the N x N window against ``target``.

    ``kappa_value`` overrides the mismatch derived from the config's length.
    """
    target = _check_dims(plan, target)
    k = kappa(config) if kappa_value is None else float(kappa_value)
    state = propagate(plan, config, k, full=keep_full)
    w = project(state, config, plan.dim)
    return SynthesisResult(
        projected=w,
        full=state if keep_full else None,
        metrics=gate_metrics(target, w),
        kappa=k,
        config_echo=config,
        plan_echo=plan,
    )


def leaked_probability(full: np.ndarray, config: PhysicalConfig, n: int) -> float:
    """Mean probability that a computational input ends outside the window."""
    offset = config.window_offset_for(n)
    cols = full[:, offset:offset + n]
    outside = np.ones(full.shape[0], dtype=bool)
    outside[offset:offset + n] = False
    return float(np.sum(np.abs(cols[outside]) ** 2) / n)


def log_grid(l_min: float = 1e-4, l_max: float = 1.0, points: int = 200) -> np.ndarray:
    if not 0 < l_min <= l_max or points < 1:
        raise ValueError("need 0 < l_min <= l_max and points >= 1")
    return np.logspace(np.log10(l_min), np.log10(l_max), points)


def sweep_lengths(target, config_base: PhysicalConfig, lengths: Sequence[float],
                  plan: MeshPlan | None = None) -> list[tuple[float, GateMetrics]]:
    """Score one decomposition of ``target`` at each interaction length, sorted by length."""
    lengths = sorted(float(x) for x in lengths)
    if not lengths:
        raise ValueError("no lengths given")
    if lengths[0] <= 0:
        raise ValueError("lengths must be positive")
    target = np.asarray(target, dtype=complex)
    plan = decompose(target) if plan is None else plan
    _check_dims(plan, target)
    out = []
    for length in lengths:
        w = projected_gate(plan, config_base.with_length(length))
        out.append((length, gate_metrics(target, w)))
    return out


def threshold_length(curve: Sequence[tuple[float, float]], target_value: float) -> float | None:
    """Smallest sampled L from which the metric stays >= target_value for all larger samples."""
    if len(curve) == 0:
        raise ValueError("empty curve")
    threshold = None
    for length, value in reversed(list(curve)):
        if value < target_value:
            break
        threshold = length
    return threshold
