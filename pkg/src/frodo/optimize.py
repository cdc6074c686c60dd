"""Local refinement of per-layer settings at finite phase mismatch.

The search runs in device coordinates (the settings actually sent to each
layer, see ``synthesis.drive_settings``): mixing angles, layer phases and the
final phase layer.  The Clements plan seeds the search and the optimum is
handed back as an ideal-convention ``MeshPlan``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize

from .clements import MeshPlan, RotationBlock
from .linalg import GateMetrics, gate_metrics
from .model import PhysicalConfig, apply_ladder, frodo_block_dtheta, kappa, ladder_blocks
from .synthesis import (
    SynthesisResult,
    drive_settings,
    layer_stack,
    logical_settings,
    synthesize,
)

CostKind = Literal["fidelity_cost", "uniformity_cost"]
COST_KINDS = ("fidelity_cost", "uniformity_cost")
METHODS = ("lbfgs", "nelder-mead", "coordinate")
INFIDELITY_FLOOR = 1e-15


@dataclass(frozen=True)
class OptimizationProblem:
    target: np.ndarray
    config: PhysicalConfig
    initial_plan: MeshPlan
    cost_kind: CostKind = "fidelity_cost"
    budget: int = 2000
    tolerance: float = 1e-10
    method: str = "lbfgs"

    def __post_init__(self):
        if self.cost_kind not in COST_KINDS:
            raise ValueError(f"cost_kind must be one of {COST_KINDS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    cost: float
    fidelity: float
    success_prob: float
    uniformity: float


@dataclass
class OptimizationResult:
    plan: MeshPlan
    result: SynthesisResult
    trace: list[TraceRow] = field(default_factory=list)
    status: str = "converged"  # or "budget_exhausted"
    evaluations: int = 0
    initial_cost: float = float("nan")
    final_cost: float = float("nan")

    def __iter__(self):
        # allows ``plan, result, trace = optimize(problem)``
        return iter((self.plan, self.result, self.trace))


def metrics_cost(metrics: GateMetrics, kind: CostKind) -> float:
    if kind == "fidelity_cost":
        infidelity = max(1.0 - metrics.fidelity, INFIDELITY_FLOOR)
        return float(-metrics.success_prob * np.log10(infidelity) ** 2)
    if kind == "uniformity_cost":
        return -metrics.uniformity
    raise ValueError(f"unknown cost kind {kind!r}")


def cost(result: SynthesisResult, kind: CostKind) -> float:
    """-P [log10(1 - F)]^2 or -B_c for a synthesized gate."""
    return metrics_cost(result.metrics, kind)


def _cost_and_dw(target: np.ndarray, w: np.ndarray, kind: CostKind):
    """Cost, its metrics, and G with dC = Re sum(conj(G) * dW)."""
    n = w.shape[0]
    metrics = gate_metrics(target, w)
    c = metrics_cost(metrics, kind)
    if kind == "uniformity_cost":
        mod = np.abs(w)
        unit = np.divide(w, mod, out=np.zeros_like(w), where=mod > 0)
        return c, metrics, -unit / n**1.5
    overlap = np.vdot(target, w)
    norm = np.vdot(w, w).real
    d_overlap2 = 2 * overlap * target
    d_norm = 2 * w
    d_fid = (d_overlap2 * norm - abs(overlap) ** 2 * d_norm) / (n * norm**2)
    d_prob = d_norm / n
    infidelity = 1.0 - metrics.fidelity
    if infidelity <= INFIDELITY_FLOOR:
        lg = np.log10(INFIDELITY_FLOOR)
        return c, metrics, -lg**2 * d_prob
    lg = np.log10(infidelity)
    grad = -lg**2 * d_prob + metrics.success_prob * 2 * lg / (infidelity * np.log(10)) * d_fid
    return c, metrics, grad


class CascadeObjective:
    """Cost (and exact gradient) of a device-setting vector.

    Vector layout: P mixing angles, P layer phases, N final phases.
    """

    def __init__(self, template: MeshPlan, target, config: PhysicalConfig, kind: CostKind,
                 kappa_value: float | None = None):
        self.template = template
        self.target = np.asarray(target, dtype=complex)
        self.config = config
        self.kind = kind
        self.kappa = kappa(config) if kappa_value is None else float(kappa_value)
        self.n = template.dim
        self.p = len(template.blocks)
        self.offset = config.window_offset_for(self.n)
        self.size = config.ambient_bins
        self.evaluations = 0
        self.last_metrics: GateMetrics | None = None

    def pack(self, device: MeshPlan) -> np.ndarray:
        th = [b.theta for b in device.blocks]
        ph = [b.phi for b in device.blocks]
        return np.array(th + ph + list(device.final_phases), dtype=float)

    def unpack(self, x) -> MeshPlan:
        x = np.asarray(x, dtype=float)
        p = self.p
        blocks = tuple(
            RotationBlock(b.pair_low, float(x[k]), float(x[p + k]))
            for k, b in enumerate(self.template.blocks)
        )
        return MeshPlan(self.n, blocks, tuple(x[2 * p:]))

    def _forward(self, device: MeshPlan, keep: bool):
        ms, blocks, phis = layer_stack(device, self.config, self.kappa)
        state = np.zeros((self.size, self.n), dtype=complex)
        window = slice(self.offset, self.offset + self.n)
        state[window] = np.eye(self.n)
        states = [state]
        for m, f, phi in zip(ms, blocks, phis):
            state = apply_ladder(state, m, f, phi)
            if keep:
                states.append(state)
        final = np.exp(1j * np.asarray(device.final_phases))
        w = final[:, None] * state[window]
        return w, final, ms, blocks, states

    def value(self, x) -> float:
        self.evaluations += 1
        w, *_ = self._forward(self.unpack(x), keep=False)
        self.last_metrics = gate_metrics(self.target, w)
        return metrics_cost(self.last_metrics, self.kind)

    def metrics(self, x) -> GateMetrics:
        w, *_ = self._forward(self.unpack(x), keep=False)
        return gate_metrics(self.target, w)

    def value_and_grad(self, x):
        self.evaluations += 1
        device = self.unpack(x)
        w, final, ms, blocks, states = self._forward(device, keep=True)
        c, self.last_metrics, g = _cost_and_dw(self.target, w, self.kind)
        p, n = self.p, self.n
        grad = np.zeros(2 * p + n)
        # final phases: dW_j = i W_j dpsi_j
        grad[2 * p:] = np.real(np.sum(np.conj(g) * 1j * w, axis=1))

        adj = np.zeros((self.size, n), dtype=complex)
        adj[self.offset:self.offset + n] = np.conj(final)[:, None] * g
        half = self.size // 2
        dblocks = ladder_blocks(self.size, ms, x[:p], x[p:2 * p], self.kappa, frodo_block_dtheta)
        for k in range(p - 1, -1, -1):
            m, f = ms[k], blocks[k]
            before = states[k]
            if m % 2 == 0:
                lam = adj.reshape(half, 2, n)
                src = before.reshape(half, 2, n)
                dtheta = dblocks[k]
            else:
                lam = adj[1:-1].reshape(half - 1, 2, n)
                src = before[1:-1].reshape(half - 1, 2, n)
                dtheta = dblocks[k, :-1]
            # theta: sum over rungs of Re <lam, dF/dtheta src>
            overlap = np.conj(lam) @ np.swapaxes(src, 1, 2)  # (rungs, 2, 2)
            grad[k] = np.real(np.vdot(np.conj(dtheta), overlap))
            # back-propagate the adjoint through this layer: L^dagger adj
            fh = np.conj(np.swapaxes(f, 1, 2))
            if m % 2 == 0:
                adj = (fh @ lam).reshape(self.size, n)
            else:
                new = np.empty_like(adj)
                new[1:-1] = (fh[:-1] @ lam).reshape(self.size - 2, n)
                new[0] = adj[0]
                new[-1] = np.exp(-1j * x[p + k]) * adj[-1]
                adj = new
            # layer phase multiplies every input bin in the targeted bin's mode
            rows = slice(m % 2, None, 2)
            grad[p + k] = -np.imag(np.vdot(adj[rows], before[rows]))
        return c, grad


def _coordinate_descent(fun, x0, budget: int, tol: float, step: float = 0.1):
    x = np.array(x0, dtype=float)
    fx = fun(x)
    evals, it = 1, 0
    history = [(x.copy(), fx)]
    while step > tol and evals < budget:
        improved = False
        for i in range(len(x)):
            for delta in (step, -step):
                trial = x.copy()
                trial[i] += delta
                ft = fun(trial)
                evals += 1
                if ft < fx:
                    x, fx, improved = trial, ft, True
                    break
                if evals >= budget:
                    break
            if evals >= budget:
                break
        it += 1
        history.append((x.copy(), fx))
        if not improved:
            step /= 2
    status = "converged" if step <= tol else "budget_exhausted"
    return x, fx, status, history


def optimize(problem: OptimizationProblem, kappa_value: float | None = None) -> OptimizationResult:
    """Refine the settings of ``problem.initial_plan`` to lower the chosen cost.

    Deterministic for a given problem.  The returned plan is never worse
    than the seed: if the search ends above the starting cost, the seed is
    returned unchanged.
    """
    config = problem.config
    target = np.asarray(problem.target, dtype=complex)
    seed_device = drive_settings(problem.initial_plan, config)
    obj = CascadeObjective(seed_device, target, config, problem.cost_kind, kappa_value)
    x0 = obj.pack(seed_device)
    p = obj.p
    c0 = obj.value(x0)

    best = {"x": x0.copy(), "c": c0, "m": obj.last_metrics}
    trace = [TraceRow(0, c0, *_metric_tuple(obj.last_metrics))]

    def record(x, c):
        if c < best["c"]:
            best.update(x=np.array(x, dtype=float), c=c, m=obj.last_metrics)

    def log_iteration():
        trace.append(TraceRow(len(trace), best["c"], *_metric_tuple(best["m"])))

    if problem.method == "lbfgs":
        def fg(x):
            c, g = obj.value_and_grad(x)
            record(x, c)
            return c, g

        bounds = [(0.0, None)] * p + [(None, None)] * (p + obj.n)
        res = minimize(
            fg, x0, jac=True, method="L-BFGS-B", bounds=bounds,
            callback=lambda xk: log_iteration(),
            options={"maxfun": problem.budget, "maxiter": problem.budget,
                     "ftol": problem.tolerance, "gtol": 1e-12},
        )
        exhausted = obj.evaluations >= problem.budget or res.status == 1
    else:
        # theta >= 0 through theta = |u|
        def fold(x):
            y = np.array(x, dtype=float)
            y[:p] = np.abs(y[:p])
            return y

        def f(x):
            y = fold(x)
            c = obj.value(y)
            record(y, c)
            return c

        if problem.method == "nelder-mead":
            res = minimize(
                f, x0, method="Nelder-Mead", callback=lambda xk: log_iteration(),
                options={"maxfev": problem.budget, "fatol": problem.tolerance,
                         "xatol": 1e-10, "adaptive": True},
            )
            exhausted = res.status in (1, 2)
        else:
            _, _, status, history = _coordinate_descent(f, x0, problem.budget, problem.tolerance)
            for _ in history[1:]:
                log_iteration()
            exhausted = status == "budget_exhausted"

    final_device = obj.unpack(best["x"])
    plan = logical_settings(final_device, config)
    result = synthesize(plan, config, target, kappa_value=kappa_value)
    final_cost = cost(result, problem.cost_kind)
    if final_cost > c0:
        plan = problem.initial_plan
        result = synthesize(plan, config, target, kappa_value=kappa_value)
        final_cost = cost(result, problem.cost_kind)
    if trace[-1].cost != best["c"]:
        log_iteration()
    return OptimizationResult(
        plan=plan,
        result=result,
        trace=trace,
        status="budget_exhausted" if exhausted else "converged",
        evaluations=obj.evaluations,
        initial_cost=c0,
        final_cost=final_cost,
    )


def _metric_tuple(m: GateMetrics) -> tuple[float, float, float]:
    return m.fidelity, m.success_prob, m.uniformity
