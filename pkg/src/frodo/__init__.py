"""Frequency-bin unitary synthesis with cascaded acousto-optic FRODO layers."""

__version__ = "0.1.0"

from .clements import MeshPlan, RotationBlock, decompose, reconstruct
from .linalg import (
    GateMetrics,
    dft_matrix,
    fidelity,
    gate_metrics,
    haar_random_unitary,
    success_probability,
    uniformity_bc,
)
from .model import PhysicalConfig, frodo_block, kappa, layer_matrix, ode_oracle
from .optimize import OptimizationProblem, cost, optimize
from .synthesis import SynthesisResult, sweep_lengths, synthesize, threshold_length

__all__ = [
    "GateMetrics",
    "MeshPlan",
    "OptimizationProblem",
    "PhysicalConfig",
    "RotationBlock",
    "SynthesisResult",
    "cost",
    "decompose",
    "dft_matrix",
    "fidelity",
    "frodo_block",
    "gate_metrics",
    "haar_random_unitary",
    "kappa",
    "layer_matrix",
    "ode_oracle",
    "optimize",
    "reconstruct",
    "success_probability",
    "sweep_lengths",
    "synthesize",
    "threshold_length",
    "uniformity_bc",
]
