"""Acousto-optic FRODO transfer matrices over a frequency-bin ladder.

All gate math is dimensionless: a block is set by its mixing angle ``theta``,
the preceding mode-dependent phase ``phi`` and the rung mismatch
``kappa_ell`` (mismatch times length).  ``PhysicalConfig`` only turns device
constants into the mismatch parameter.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class ConvergenceError(RuntimeError):
    """Numerical integration did not settle at the requested step count."""


@dataclass(frozen=True)
class PhysicalConfig:
    bin_spacing_hz: float = 7e9
    group_index_s: float = 2.68
    group_index_as: float = 3.76
    # not needed by the dimensionless model; only used to convert theta into a
    # phonon amplitude. No default value for it is known.
    acoustic_velocity: float | None = None
    interaction_length_m: float = 0.1
    ambient_bins: int = 64
    # None -> centred window on an even ambient index (see window_offset_for)
    window_offset: int | None = None

    def __post_init__(self):
        if not self.group_index_as > self.group_index_s > 0:
            raise ValueError("need group_index_as > group_index_s > 0")
        if self.bin_spacing_hz <= 0:
            raise ValueError("bin spacing must be positive")
        if self.interaction_length_m < 0:
            raise ValueError("interaction length must be nonnegative")
        if self.ambient_bins < 2 or self.ambient_bins % 2:
            raise ValueError("ambient_bins must be an even integer >= 2")
        if self.window_offset is not None and self.window_offset < 0:
            raise ValueError("window_offset must be nonnegative")

    @property
    def v_s(self) -> float:
        return SPEED_OF_LIGHT / self.group_index_s

    @property
    def v_as(self) -> float:
        return SPEED_OF_LIGHT / self.group_index_as

    @property
    def inverse_velocity_mismatch(self) -> float:
        """1/v_as - 1/v_s in s/m."""
        return (self.group_index_as - self.group_index_s) / SPEED_OF_LIGHT

    def window_offset_for(self, n: int) -> int:
        if n > self.ambient_bins:
            raise ValueError(f"{n} computational bins do not fit in {self.ambient_bins}")
        if self.window_offset is not None:
            if self.window_offset + n > self.ambient_bins:
                raise ValueError("computational window runs past the ambient ladder")
            return self.window_offset
        offset = (self.ambient_bins - n) // 2
        return offset - offset % 2

    def with_length(self, length_m: float) -> "PhysicalConfig":
        return dataclasses.replace(self, interaction_length_m=float(length_m))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_file(cls, path, section: str = "physical") -> "PhysicalConfig":
        parser = configparser.ConfigParser()
        if not parser.read(Path(path)):
            raise FileNotFoundError(path)
        return cls.from_mapping(parser[section] if parser.has_section(section) else {})

    @classmethod
    def from_mapping(cls, data) -> "PhysicalConfig":
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            raw = data[f.name]
            if raw is None or str(raw).strip().lower() in ("", "none"):
                kwargs[f.name] = None
            elif f.name in ("ambient_bins", "window_offset"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = float(raw)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


def kappa(config: PhysicalConfig) -> float:
    """Dimensionless mismatch 2 Omega L (1/v_as - 1/v_s) of the first rung."""
    omega = 2 * np.pi * config.bin_spacing_hz
    return 2 * omega * config.interaction_length_m * config.inverse_velocity_mismatch


def length_for_kappa(config: PhysicalConfig, kappa_value: float) -> float:
    omega = 2 * np.pi * config.bin_spacing_hz
    return kappa_value / (2 * omega * config.inverse_velocity_mismatch)


def phonon_coupling(theta: float, config: PhysicalConfig) -> float:
    """|g B| needed for mixing angle ``theta`` over the configured length."""
    if config.acoustic_velocity is None:
        raise ValueError("acoustic_velocity is not set")
    if config.interaction_length_m <= 0:
        raise ValueError("interaction length must be positive")
    root = np.sqrt(config.v_as * config.v_s * config.acoustic_velocity)
    return theta * root / config.interaction_length_m


def frodo_block(theta, phi, kappa_ell) -> np.ndarray:
    """2x2 FRODO transfer matrix; broadcasts, returning shape (..., 2, 2).

    Uses b = sqrt(theta^2 + (x/2)^2) with x = kappa_ell and the residual
    d = b - |x|/2 = theta^2 / (b + |x|/2), so the diagonal is
    e^{+-i d} plus a correction of size d*sin(b)/b that carries the fast
    e^{-+i x/2} phase.  This keeps the far-detuned limit accurate to
    round-off even for |x| ~ 1e12.
    """
    theta, phi, x = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float), np.asarray(kappa_ell, dtype=float)
    )
    half = 0.5 * np.abs(x)
    sign = np.where(x < 0, -1.0, 1.0)
    b = np.hypot(theta, half)
    denom = b + half
    d = np.divide(theta**2, denom, out=np.zeros_like(b), where=denom > 0)
    sinc_b = np.sinc(b / np.pi)  # sin(b)/b, 1 at b = 0
    fast = np.exp(-0.5j * x)
    ephi = np.exp(1j * phi)

    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ephi * (np.exp(1j * sign * d) - 1j * sign * d * sinc_b * fast)
    out[..., 0, 1] = -theta * sinc_b * fast
    out[..., 1, 0] = ephi * theta * sinc_b * fast.conj()
    out[..., 1, 1] = np.exp(-1j * sign * d) + 1j * sign * d * sinc_b * fast.conj()
    return out


def _rk4_propagator(theta, phi, x, steps: int) -> np.ndarray:
    h = 1.0 / steps
    # columns: the two basis inputs; phi is applied to the lower bin first
    shape = theta.shape
    a = np.zeros(shape + (2,), dtype=complex)
    b = np.zeros(shape + (2,), dtype=complex)
    a[..., 0] = np.exp(1j * phi)
    b[..., 1] = 1.0
    th = theta[..., None]
    xx = x[..., None]

    def rhs(z, a, b):
        ph = np.exp(1j * xx * z)
        # i g B = -|g B|  ->  -i g* B* = -|gB|,  -i g B = +|gB|
        return -th * b * ph.conj(), th * a * ph

    for k in range(steps):
        z = k * h
        k1a, k1b = rhs(z, a, b)
        k2a, k2b = rhs(z + h / 2, a + h / 2 * k1a, b + h / 2 * k1b)
        k3a, k3b = rhs(z + h / 2, a + h / 2 * k2a, b + h / 2 * k2b)
        k4a, k4b = rhs(z + h, a + h * k3a, b + h * k3b)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)

    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, :] = a
    out[..., 1, :] = b
    return out


def ode_oracle(theta, phi, kappa_ell, steps: int = 10_000, tol: float = 1e-6) -> np.ndarray:
    """Integrate the steady-state coupled-mode equations over one segment.

    Works in the normalized coordinate z in [0, 1] where the coupling is
    ``theta`` and the mismatch phase is ``kappa_ell * z``.  Fixed-step RK4 at
    ``steps`` and ``2*steps``; raises ConvergenceError if they disagree by
    more than ``tol``.  Broadcasts over array inputs.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    theta, phi, x = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float), np.asarray(kappa_ell, dtype=float)
    )
    coarse = _rk4_propagator(theta, phi, x, steps)
    fine = _rk4_propagator(theta, phi, x, 2 * steps)
    change = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    if change > tol:
        raise ConvergenceError(f"step halving changed the propagator by {change:.2e}")
    return fine


@dataclass(frozen=True)
class LayerSpec:
    """One FRODO layer on an ``size``-bin ladder, targeting ambient pair (m, m+1)."""

    size: int
    m: int
    theta: float
    phi: float
    kappa: float

    def rungs(self) -> np.ndarray:
        lo = np.arange(self.m % 2, self.size - 1, 2)
        return lo

    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower indices, stacked 2x2 blocks) for every rung on the ladder."""
        lo = self.rungs()
        ell = (lo - self.m) // 2
        sign = 1.0 if self.m % 2 else -1.0
        return lo, frodo_block(self.theta, self.phi, sign * self.kappa * ell)

    def boundary_phases(self) -> tuple[np.ndarray, np.ndarray]:
        """Unpaired edge bins: e^{i phi} in the targeted lower bin's mode, else 1."""
        lo = self.rungs()
        covered = np.zeros(self.size, dtype=bool)
        covered[lo] = covered[lo + 1] = True
        idx = np.flatnonzero(~covered)
        phase = np.where(idx % 2 == self.m % 2, np.exp(1j * self.phi), 1.0 + 0j)
        return idx, phase

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Left-multiply ``state`` (size x k) by this layer, returning a new array."""
        f = ladder_blocks(self.size, [self.m], [self.theta], [self.phi], self.kappa)[0]
        return apply_ladder(np.asarray(state, dtype=complex), self.m, f, self.phi)

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=complex)
        lo, f = self.blocks()
        out[lo, lo] = f[:, 0, 0]
        out[lo, lo + 1] = f[:, 0, 1]
        out[lo + 1, lo] = f[:, 1, 0]
        out[lo + 1, lo + 1] = f[:, 1, 1]
        idx, phase = self.boundary_phases()
        out[idx, idx] = phase
        return out


def ladder_blocks(size: int, ms, thetas, phis, kappa_value: float, block_fn=None) -> np.ndarray:
    """Rung blocks for a stack of layers, shape (layers, size // 2, 2, 2).

    Layer k targets ambient pair (ms[k], ms[k] + 1).  For odd ``ms[k]`` the
    last slot has no partner bin and must be ignored (see ``apply_ladder``).
    ``block_fn`` swaps in another rung function, e.g. ``frodo_block_dtheta``.
    """
    ms = np.asarray(ms, dtype=int)
    lo = (ms % 2)[:, None] + 2 * np.arange(size // 2)[None, :]
    ell = (lo - ms[:, None]) // 2
    sign = np.where(ms % 2, 1.0, -1.0)[:, None]
    block_fn = frodo_block if block_fn is None else block_fn
    return block_fn(np.asarray(thetas, dtype=float)[:, None], np.asarray(phis, dtype=float)[:, None],
                    sign * kappa_value * ell)


def apply_ladder(state: np.ndarray, m: int, blocks: np.ndarray, phi: float) -> np.ndarray:
    """One layer acting on ``state`` (size x k); ``blocks`` as from ``ladder_blocks``.

    Requires an even ladder size.  With ``m`` odd, bin 0 (other mode) is left
    alone and bin size-1 (same mode as m) picks up e^{i phi}.
    """
    size = state.shape[0]
    if m % 2 == 0:
        return (blocks @ state.reshape(size // 2, 2, -1)).reshape(state.shape)
    out = np.empty_like(state)
    out[1:-1] = (blocks[:-1] @ state[1:-1].reshape(size // 2 - 1, 2, -1)).reshape(size - 2, -1)
    out[0] = state[0]
    out[-1] = np.exp(1j * phi) * state[-1]
    return out


def layer_spec(config: PhysicalConfig, block, gate_dim: int, kappa_value: float | None = None) -> LayerSpec:
    m = block.pair_low + config.window_offset_for(gate_dim)
    if block.pair_low < 0 or block.pair_low + 1 >= gate_dim or m + 1 >= config.ambient_bins:
        raise ValueError(f"pair ({block.pair_low}, {block.pair_low + 1}) exceeds the ladder bounds")
    k = kappa(config) if kappa_value is None else float(kappa_value)
    return LayerSpec(config.ambient_bins, m, float(block.theta), float(block.phi), k)


def layer_matrix(config: PhysicalConfig, block, gate_dim: int, kappa_value: float | None = None) -> np.ndarray:
    """Full M x M layer for one rotation block (mismatch from ``config`` unless overridden)."""
    return layer_spec(config, block, gate_dim, kappa_value).matrix()


def _sinc_curvature(b: np.ndarray) -> np.ndarray:
    """(b cos b - sin b) / b^3, i.e. (d/db sinc b) / b, with its b -> 0 limit."""
    small = b < 1e-3
    safe = np.where(small, 1.0, b)
    exact = (safe * np.cos(safe) - np.sin(safe)) / safe**3
    series = -1.0 / 3.0 + b**2 / 30.0
    return np.where(small, series, exact)


def frodo_block_dtheta(theta, phi, kappa_ell) -> np.ndarray:
    """Partial derivative of ``frodo_block`` with respect to ``theta``."""
    theta, phi, x = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float), np.asarray(kappa_ell, dtype=float)
    )
    b = np.hypot(theta, 0.5 * x)
    s = np.sinc(b / np.pi)
    g = _sinc_curvature(b)
    fast = np.exp(-0.5j * x)
    ephi = np.exp(1j * phi)
    mix = s + theta**2 * g

    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ephi * fast * theta * (-s + 0.5j * x * g)
    out[..., 0, 1] = -fast * mix
    out[..., 1, 0] = ephi * fast.conj() * mix
    out[..., 1, 1] = fast.conj() * theta * (-s - 0.5j * x * g)
    return out
