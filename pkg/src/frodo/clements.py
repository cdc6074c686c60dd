"""Rectangular (Clements) mesh decomposition onto nearest-neighbour rotations.

Every block uses the convention

    U(theta, phi) = [[e^{i phi} cos(theta), -sin(theta)],
                     [e^{i phi} sin(theta),  cos(theta)]]

acting on bins (pair_low, pair_low + 1).  A plan is applied block by block in
list order (the first block acts first on the input), followed by the diagonal
``final_phases`` layer.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import unitarity_error

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class RotationBlock:
    pair_low: int
    theta: float
    phi: float


@dataclass(frozen=True)
class MeshPlan:
    dim: int
    blocks: tuple[RotationBlock, ...]
    final_phases: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        phases = self.final_phases or (0.0,) * self.dim
        object.__setattr__(self, "final_phases", tuple(float(p) for p in phases))
        if len(self.final_phases) != self.dim:
            raise ValueError("final_phases must have one entry per bin")

    # -- flat parameter view used by the optimizer ------------------------
    def angles(self) -> np.ndarray:
        """(theta_1, phi_1, ..., theta_P, phi_P, final phases...)"""
        flat = [x for b in self.blocks for x in (b.theta, b.phi)]
        return np.array(flat + list(self.final_phases), dtype=float)

    def with_angles(self, values) -> "MeshPlan":
        values = np.asarray(values, dtype=float)
        n_blocks = len(self.blocks)
        if values.shape != (2 * n_blocks + self.dim,):
            raise ValueError("wrong parameter vector length")
        blocks = tuple(
            RotationBlock(b.pair_low, float(values[2 * k]), float(values[2 * k + 1]))
            for k, b in enumerate(self.blocks)
        )
        return MeshPlan(self.dim, blocks, tuple(values[2 * n_blocks:]))

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "order": "first block acts first (right-most factor); final_phases applied last",
            "blocks": [
                {"pair_low": b.pair_low, "theta": b.theta, "phi": b.phi} for b in self.blocks
            ],
            "final_phases": list(self.final_phases),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeshPlan":
        blocks = tuple(
            RotationBlock(int(b["pair_low"]), float(b["theta"]), float(b["phi"]))
            for b in data["blocks"]
        )
        plan = cls(int(data["dim"]), blocks, tuple(data["final_phases"]))
        validate_plan(plan)
        return plan

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "MeshPlan":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json(sort_keys=True).encode()).hexdigest()[:16]


def rotation(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    return np.array([[e * c, -s], [e * s, c]])


def validate_plan(plan: MeshPlan) -> None:
    if plan.dim < 1:
        raise ValueError("plan dimension must be >= 1")
    for b in plan.blocks:
        if not 0 <= b.pair_low < plan.dim - 1:
            raise ValueError(f"pair ({b.pair_low}, {b.pair_low + 1}) outside a {plan.dim}-bin mesh")


def _factor_u2(a: np.ndarray) -> tuple[float, float, float, float]:
    """Write a 2x2 unitary as diag(e^{i alpha}, e^{i beta}) @ rotation(theta, phi).

    Returns (theta, phi, alpha, beta) with theta in [0, pi/2].
    """
    theta = float(np.arctan2(abs(a[1, 0]), abs(a[1, 1])))
    c, s = np.cos(theta), np.sin(theta)
    if s < 1e-15:
        # no mixing: phi is undetermined, put everything into the output phases
        return 0.0, 0.0, float(np.angle(a[0, 0])), float(np.angle(a[1, 1]))
    if c < 1e-15:
        return theta, 0.0, float(np.angle(-a[0, 1])), float(np.angle(a[1, 0]))
    alpha = float(np.angle(-a[0, 1]))
    beta = float(np.angle(a[1, 1]))
    phi = float(np.angle(a[0, 0])) - alpha
    return theta, phi % TWO_PI, alpha, beta


def _nulling_rotation(keep, kill) -> tuple[float, float]:
    """Angles of rotation(theta, phi) whose use nulls ``kill`` against ``keep``.

    Solves e^{i phi} sin(theta) * keep = cos(theta) * kill ... see callers; the
    degenerate kill == 0 case returns the zero-drive block.
    """
    if kill == 0:
        return 0.0, 0.0
    theta = float(np.arctan2(abs(kill), abs(keep)))
    if keep == 0:
        return theta, 0.0
    return theta, float(np.angle(kill) - np.angle(keep)) % TWO_PI


def decompose(target, atol: float = 1e-8) -> MeshPlan:
    """Factor a unitary into N(N-1)/2 rotation blocks plus a diagonal phase layer."""
    u = np.array(target, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"target must be square, got shape {u.shape}")
    n = u.shape[0]
    if n == 0:
        raise ValueError("target is empty")
    if unitarity_error(u) > atol:
        raise ValueError("target is not unitary")

    right: list[RotationBlock] = []  # applied as U @ rotation^{-1}
    left: list[RotationBlock] = []  # applied as rotation @ U

    for i in range(n - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                row, col = n - 1 - j, i - j
                # column op on (col, col+1): new[row, col] = e^{-i phi} c u - s v
                u_rc, v_rc = u[row, col], u[row, col + 1]
                theta, phi = _nulling_rotation(v_rc, u_rc)
                # need e^{-i phi} c u = s v  ->  tan(theta) = |u|/|v|, phi = arg u - arg v
                inv = rotation(theta, phi).conj().T
                u[:, col:col + 2] = u[:, col:col + 2] @ inv
                u[row, col] = 0.0
                right.append(RotationBlock(col, theta, phi))
        else:
            for j in range(i + 1):
                row, col = n - i - 1 + j, j
                # row op on (row-1, row): new[row, col] = e^{i phi} s x + c y
                x, y = u[row - 1, col], u[row, col]
                # e^{i phi} s x = -c y -> tan(theta) = |y|/|x|, phi = arg(-y) - arg(x)
                theta, phi = _nulling_rotation(x, -y)
                u[row - 1:row + 1, :] = rotation(theta, phi) @ u[row - 1:row + 1, :]
                u[row, col] = 0.0
                left.append(RotationBlock(row - 1, theta, phi))

    diag = np.diagonal(u).copy()
    diag /= np.abs(diag)

    # U = L_1^{-1} ... L_k^{-1} D R_j ... R_1; push each L^{-1} through D.
    pushed: list[RotationBlock] = []
    for blk in reversed(left):
        a = blk.pair_low
        sub = rotation(blk.theta, blk.phi).conj().T @ np.diag(diag[a:a + 2])
        theta, phi, alpha, beta = _factor_u2(sub)
        diag[a], diag[a + 1] = np.exp(1j * alpha), np.exp(1j * beta)
        pushed.append(RotationBlock(a, theta, phi))

    # application order: R_1 ... R_j, then pushed blocks innermost first
    blocks = tuple(right) + tuple(pushed)
    phases = tuple(float(np.angle(d)) % TWO_PI for d in diag)
    return MeshPlan(n, blocks, phases)


def embed(block_matrix: np.ndarray, pair_low: int, dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    out[pair_low:pair_low + 2, pair_low:pair_low + 2] = block_matrix
    return out


def reconstruct(plan: MeshPlan) -> np.ndarray:
    """Ideal product of the plan's rotations and final phases."""
    validate_plan(plan)
    u = np.eye(plan.dim, dtype=complex)
    for b in plan.blocks:
        a = b.pair_low
        u[a:a + 2, :] = rotation(b.theta, b.phi) @ u[a:a + 2, :]
    return np.exp(1j * np.asarray(plan.final_phases))[:, None] * u


def identity_plan(dim: int) -> MeshPlan:
    """Zero-drive plan with the standard block schedule for ``dim`` bins."""
    return decompose(np.eye(dim))
