"""Matrix helpers, standard targets, Haar sampling and gate metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARY_ATOL = 1e-10

HAAR_ALGORITHM = "qr-ginibre-phasefix/numpy-pcg64"


@dataclass(frozen=True)
class GateMetrics:
    fidelity: float
    success_prob: float
    uniformity: float

    def as_dict(self) -> dict[str, float]:
        return {
            "fidelity": self.fidelity,
            "success_prob": self.success_prob,
            "uniformity": self.uniformity,
        }


def _square(mat, name: str = "matrix") -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if mat.size == 0:
        raise ValueError(f"{name} is empty")
    return mat


def unitarity_error(mat) -> float:
    """Max-norm of U^dagger U - I."""
    mat = np.asarray(mat)
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[1]))))


def is_unitary(mat, atol: float = UNITARY_ATOL) -> bool:
    mat = np.asarray(mat)
    return mat.ndim == 2 and mat.shape[0] == mat.shape[1] and unitarity_error(mat) <= atol


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT with V[j, k] = exp(2 pi i j k / n) / sqrt(n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    jk = np.outer(np.arange(n), np.arange(n))
    # reduce mod n before the exponent to keep the phases exact
    return np.exp(2j * np.pi * (jk % n) / n) / np.sqrt(n)


def haar_random_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-distributed n x n unitary (QR of a complex Ginibre matrix).

    ``seed`` may be an int or a ``numpy.random.Generator``; the same int
    always returns the same matrix.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def fidelity(target, synthesized) -> float:
    """|Tr(V^dagger W)|^2 / (N Tr(W^dagger W))."""
    v = _square(target, "target")
    w = _square(synthesized, "synthesized")
    if v.shape != w.shape:
        raise ValueError(f"dimension mismatch: {v.shape} vs {w.shape}")
    norm = np.vdot(w, w).real
    if norm <= 0:
        raise ValueError("synthesized matrix is zero")
    overlap = np.vdot(v, w)  # == Tr(V^dagger W)
    return float(abs(overlap) ** 2 / (v.shape[0] * norm))


def success_probability(synthesized) -> float:
    w = _square(synthesized, "synthesized")
    return float(np.vdot(w, w).real / w.shape[0])


def uniformity_bc(synthesized) -> float:
    """Bhattacharyya coefficient against a flat |W_ij|^2 = 1/N profile."""
    w = _square(synthesized, "synthesized")
    n = w.shape[0]
    return float(np.abs(w).sum() / n**1.5)


def gate_metrics(target, synthesized) -> GateMetrics:
    return GateMetrics(
        fidelity=fidelity(target, synthesized),
        success_prob=success_probability(synthesized),
        uniformity=uniformity_bc(synthesized),
    )
