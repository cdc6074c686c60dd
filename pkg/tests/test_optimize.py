import numpy as np
import pytest

from frodo.clements import decompose
from frodo.linalg import GateMetrics, dft_matrix, haar_random_unitary
from frodo.model import PhysicalConfig
from frodo.optimize import (
    CascadeObjective,
    OptimizationProblem,
    cost,
    metrics_cost,
    optimize,
)
from frodo.synthesis import drive_settings, log_grid, sweep_lengths, synthesize


def _m(f, p, b=0.5):
    return GateMetrics(fidelity=f, success_prob=p, uniformity=b)


def test_cost_examples():
    assert metrics_cost(_m(0.99, 1.0), "fidelity_cost") == pytest.approx(-4.0, abs=1e-10)
    assert metrics_cost(_m(0.5, 0.5, 1.0), "uniformity_cost") == -1.0
    assert metrics_cost(_m(0.999, 0.5), "fidelity_cost") == pytest.approx(-4.5, abs=1e-10)
    # the floor keeps perfect fidelity finite
    assert metrics_cost(_m(1.0, 1.0), "fidelity_cost") == pytest.approx(-225.0)
    with pytest.raises(ValueError):
        metrics_cost(_m(0.9, 1.0), "other")


def test_cost_of_synthesis_result():
    v = dft_matrix(3)
    res = synthesize(decompose(v), PhysicalConfig(interaction_length_m=0.02), v)
    assert cost(res, "uniformity_cost") == -res.metrics.uniformity


def test_problem_validation():
    v = dft_matrix(2)
    plan = decompose(v)
    cfg = PhysicalConfig()
    with pytest.raises(ValueError):
        OptimizationProblem(v, cfg, plan, budget=0)
    with pytest.raises(ValueError):
        OptimizationProblem(v, cfg, plan, tolerance=0.0)
    with pytest.raises(ValueError):
        OptimizationProblem(v, cfg, plan, cost_kind="fidelity")
    with pytest.raises(ValueError):
        OptimizationProblem(v, cfg, plan, method="bfgs")


@pytest.mark.parametrize("kind", ["fidelity_cost", "uniformity_cost"])
@pytest.mark.parametrize("n", [3, 6])
def test_adjoint_gradient_matches_differences(kind, n):
    cfg = PhysicalConfig(interaction_length_m=0.03)
    v = haar_random_unitary(n, 5)
    device = drive_settings(decompose(v), cfg)
    obj = CascadeObjective(device, v, cfg, kind)
    rng = np.random.default_rng(1)
    x = obj.pack(device) + 0.05 * rng.standard_normal(2 * obj.p + n)
    x[: obj.p] = np.abs(x[: obj.p])
    c, g = obj.value_and_grad(x)
    assert c == pytest.approx(obj.value(x), abs=1e-13)
    h = 1e-6
    fd = np.array([(obj.value(x + h * e) - obj.value(x - h * e)) / (2 * h) for e in np.eye(x.size)])
    assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


@pytest.mark.parametrize("method", ["lbfgs", "nelder-mead", "coordinate"])
@pytest.mark.parametrize("kind", ["fidelity_cost", "uniformity_cost"])
def test_never_worse_monotone_and_valid(method, kind):
    v = dft_matrix(4)
    plan = decompose(v)
    cfg = PhysicalConfig(interaction_length_m=0.02)
    start = cost(synthesize(plan, cfg, v), kind)
    res = optimize(OptimizationProblem(v, cfg, plan, kind, budget=150, method=method))
    assert res.final_cost <= start + 1e-12
    assert cost(res.result, kind) == pytest.approx(res.final_cost, abs=1e-12)
    costs = [row.cost for row in res.trace]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert costs[0] == pytest.approx(start, abs=1e-12)
    assert all(b.theta >= 0 for b in res.plan.blocks)
    assert res.status in ("converged", "budget_exhausted")
    plan2, result2, trace2 = res
    assert plan2 is res.plan and trace2 is res.trace


def test_budget_exhaustion_reported():
    v = dft_matrix(5)
    res = optimize(OptimizationProblem(v, PhysicalConfig(interaction_length_m=0.02), decompose(v), budget=3))
    assert res.status == "budget_exhausted"


def test_deterministic():
    v = haar_random_unitary(4, 12)
    prob = OptimizationProblem(v, PhysicalConfig(interaction_length_m=0.015), decompose(v), budget=80)
    a, b = optimize(prob), optimize(prob)
    assert a.plan == b.plan
    assert a.trace == b.trace


@pytest.mark.parametrize("kind", ["fidelity_cost", "uniformity_cost"])
def test_seeded_optimum_does_not_move(kind):
    v = dft_matrix(4)
    plan = decompose(v)
    prob = OptimizationProblem(v, PhysicalConfig(), plan, kind, budget=200, tolerance=1e-10)
    res = optimize(prob, kappa_value=1e12)
    assert res.final_cost == pytest.approx(res.initial_cost, abs=1e-10)
    assert res.result.metrics.fidelity >= 1 - 1e-12


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_improves_dft_where_analytic_first_exceeds_point_nine(n):
    v = dft_matrix(n)
    plan = decompose(v)
    cfg = PhysicalConfig()
    curve = sweep_lengths(v, cfg, log_grid(), plan=plan)
    length, analytic = next((l, m) for l, m in curve if m.fidelity > 0.9)
    res = optimize(OptimizationProblem(v, cfg.with_length(length), plan, budget=200))
    assert res.result.metrics.fidelity > analytic.fidelity
