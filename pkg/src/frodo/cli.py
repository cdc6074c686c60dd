"""Command-line driver.

Exit codes: 0 success, 1 validation error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .clements import MeshPlan, decompose
from .experiments import (
    DFT_HEADER,
    ENSEMBLE_HEADER,
    HADAMARD_HEADER,
    THRESHOLD_HEADER,
    check_grid,
    run_dft_study,
    run_parallel_hadamard,
    run_random_ensemble,
    save_run,
    summary_header,
)
from .linalg import dft_matrix, haar_random_unitary, is_unitary
from .model import ConvergenceError, PhysicalConfig, kappa
from .optimize import COST_KINDS, METHODS, OptimizationProblem, optimize
from .synthesis import log_grid, sweep_lengths, synthesize

log = logging.getLogger("frodo")

GRID_DEFAULTS = {"l_min": 1e-4, "l_max": 1.0, "points": 200}


class ValidationError(ValueError):
    pass


def load_settings(path: str | None) -> tuple[PhysicalConfig, dict]:
    """Physical config plus grid spec from an INI file ([physical], [grid])."""
    grid = dict(GRID_DEFAULTS)
    if path is None:
        return PhysicalConfig(), grid
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValidationError(f"cannot read config file {path}")
    config = PhysicalConfig.from_mapping(parser["physical"] if parser.has_section("physical") else {})
    if parser.has_section("grid"):
        sec = parser["grid"]
        grid["l_min"] = sec.getfloat("l_min", grid["l_min"])
        grid["l_max"] = sec.getfloat("l_max", grid["l_max"])
        grid["points"] = sec.getint("points", grid["points"])
    return config, grid


def resolve_grid(args, grid: dict) -> dict:
    for key in ("l_min", "l_max", "points"):
        value = getattr(args, key, None)
        if value is not None:
            grid[key] = value
    return grid


def load_target(spec: str, n: int | None, seed: int) -> np.ndarray:
    if spec == "dft":
        return dft_matrix(_need_n(n))
    if spec == "haar":
        return haar_random_unitary(_need_n(n), seed)
    if spec == "identity":
        return np.eye(_need_n(n), dtype=complex)
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"unknown target {spec!r} (use dft, haar, identity or a .npy/.json file)")
    if path.suffix == ".npy":
        mat = np.load(path)
    else:
        data = json.loads(path.read_text())
        mat = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
    if not is_unitary(mat, 1e-8):
        raise ValidationError(f"target in {path} is not unitary")
    return np.asarray(mat, dtype=complex)


def _need_n(n):
    if n is None or n < 1:
        raise ValidationError("--n is required for this target")
    return n


def _emit(payload: dict, out: Path | None, name: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")
        print(out / name)


# -- subcommands ------------------------------------------------------------------

def cmd_decompose(args, config, grid):
    target = load_target(args.target, args.n, args.seed)
    plan = decompose(target)
    _emit(plan.to_dict(), args.out, "plan.json")


def cmd_synthesize(args, config, grid):
    target = load_target(args.target, args.n, args.seed)
    plan = MeshPlan.from_json(Path(args.plan).read_text()) if args.plan else decompose(target)
    if args.length is not None:
        config = config.with_length(args.length)
    res = synthesize(plan, config, target, kappa_value=args.kappa)
    payload = {"L_m": config.interaction_length_m, "kappa": res.kappa, **res.metrics.as_dict(),
               "plan_digest": plan.digest()}
    _emit(payload, args.out, "synthesis.json")


def cmd_sweep(args, config, grid):
    started = time.perf_counter()
    target = load_target(args.target, args.n, args.seed)
    lengths = check_grid(log_grid(grid["l_min"], grid["l_max"], grid["points"]))
    plan = decompose(target)
    curve = sweep_lengths(target, config, lengths, plan=plan)
    rows = [(l, kappa(config.with_length(l)), m.fidelity, m.success_prob, m.uniformity) for l, m in curve]
    save_run(args.out, "sweep", config, args.seed, grid,
             {"sweep.csv": (("L_m", "kappa", "fidelity", "success_prob", "uniformity"), rows)},
             started, extra={"target": args.target, "n": args.n, "plan_digest": plan.digest()})


def cmd_ensemble(args, config, grid):
    started = time.perf_counter()
    lengths = check_grid(log_grid(grid["l_min"], grid["l_max"], grid["points"]))
    records, summary = run_random_ensemble(args.n, args.samples, lengths, args.seed, config, args.workers)
    save_run(args.out, "ensemble", config, args.seed, grid,
             {"ensemble.csv": (ENSEMBLE_HEADER, records),
              "ensemble_summary.csv": (summary_header(), summary)},
             started, extra={"n": args.n, "samples": args.samples})


def cmd_dft_study(args, config, grid):
    started = time.perf_counter()
    lengths = check_grid(log_grid(grid["l_min"], grid["l_max"], grid["points"]))
    rows, thresholds, violations = run_dft_study(
        args.n_list, lengths, args.optimize, seed=args.seed, config=config,
        budget=args.budget, method=args.method, workers=args.workers,
    )
    exhausted = sum(1 for r in rows if r[7] == "budget_exhausted")
    save_run(args.out, "dft-study", config, args.seed, grid,
             {"dft_study.csv": (DFT_HEADER, rows), "dft_thresholds.csv": (THRESHOLD_HEADER, thresholds)},
             started, extra={"n_list": list(args.n_list), "optimize": args.optimize,
                             "budget": args.budget, "method": args.method,
                             "footnote_violations": len(violations),
                             "budget_exhausted_points": exhausted})
    if violations:
        log.warning("%d points have fidelity >= 0.99 but success probability <= 0.99", len(violations))


def cmd_parallel_hadamard(args, config, grid):
    started = time.perf_counter()
    kappas = [0.0] + list(np.logspace(np.log10(args.kappa_min), np.log10(args.kappa_max), args.kappa_points))
    rungs = list(range(-args.max_rung, args.max_rung + 1))
    rows = run_parallel_hadamard(kappas, rungs, args.seed)
    save_run(args.out, "parallel-hadamard", None, args.seed,
             {"kappa_min": args.kappa_min, "kappa_max": args.kappa_max,
              "kappa_points": args.kappa_points, "max_rung": args.max_rung},
             {"parallel_hadamard.csv": (HADAMARD_HEADER, rows)}, started)


def cmd_optimize(args, config, grid):
    started = time.perf_counter()
    target = load_target(args.target, args.n, args.seed)
    if args.length is not None:
        config = config.with_length(args.length)
    plan = MeshPlan.from_json(Path(args.plan).read_text()) if args.plan else decompose(target)
    problem = OptimizationProblem(target, config, plan, args.cost, budget=args.budget,
                                  tolerance=args.tolerance, method=args.method)
    out = optimize(problem)
    trace_rows = [(t.iteration, t.cost, t.fidelity, t.success_prob, t.uniformity) for t in out.trace]
    manifest = save_run(args.out, "optimize", config, args.seed, grid,
                        {"trace.csv": (("iteration", "cost", "fidelity", "success_prob", "uniformity"),
                                       trace_rows)},
                        started, extra={"target": args.target, "n": args.n, "cost": args.cost,
                                        "method": args.method, "budget": args.budget,
                                        "status": out.status, "evaluations": out.evaluations,
                                        "initial_cost": out.initial_cost, "final_cost": out.final_cost})
    (Path(args.out) / "optimized_plan.json").write_text(out.plan.to_json(indent=2) + "\n")
    if out.status == "budget_exhausted":
        log.warning("optimizer stopped on its evaluation budget (%d)", args.budget)
    return manifest


def _n_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    def global_flags(p, suppress: bool):
        # sub-command copies must not overwrite flags given before the command
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--config", default=d(None), help="INI file with [physical] and [grid] sections")
        p.add_argument("--seed", type=int, default=d(0))
        p.add_argument("--out", type=Path, default=d(None), help="output directory")
        p.add_argument("--workers", type=int, default=d(1))
        p.add_argument("-v", "--verbose", action="store_true", default=d(False))

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="frodo", description="Frequency-bin FRODO synthesis toolkit.")
    global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def target_args(p):
        p.add_argument("--target", default="dft", help="dft, haar, identity, or a .npy/.json matrix file")
        p.add_argument("--n", type=int)

    def grid_args(p):
        p.add_argument("--l-min", dest="l_min", type=float)
        p.add_argument("--l-max", dest="l_max", type=float)
        p.add_argument("--points", type=int)

    p = sub.add_parser("decompose", parents=[common], help="write the mesh plan of a target")
    target_args(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("synthesize", parents=[common], help="score a plan at one length")
    target_args(p)
    p.add_argument("--plan", help="MeshPlan JSON (default: decompose the target)")
    p.add_argument("--length", type=float)
    p.add_argument("--kappa", type=float, help="override the mismatch parameter directly")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("sweep", parents=[common], help="metrics of one target over a length grid")
    target_args(p)
    grid_args(p)
    p.set_defaults(func=cmd_sweep, needs_out=True)

    p = sub.add_parser("ensemble", parents=[common], help="Haar-random ensemble over a length grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    grid_args(p)
    p.set_defaults(func=cmd_ensemble, needs_out=True)

    p = sub.add_parser("dft-study", parents=[common], help="DFT thresholds, optionally with optimization")
    p.add_argument("--n-list", type=_n_list, default=list(range(2, 11)), help="e.g. 2-10 or 3,5,10")
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--method", choices=METHODS, default="lbfgs")
    grid_args(p)
    p.set_defaults(func=cmd_dft_study, needs_out=True)

    p = sub.add_parser("parallel-hadamard", parents=[common], help="per-rung Hadamard quality versus mismatch")
    p.add_argument("--kappa-min", type=float, default=1e-2)
    p.add_argument("--kappa-max", type=float, default=1e3)
    p.add_argument("--kappa-points", type=int, default=101)
    p.add_argument("--max-rung", type=int, default=10)
    p.set_defaults(func=cmd_parallel_hadamard, needs_out=True)

    p = sub.add_parser("optimize", parents=[common], help="refine a plan at one length")
    target_args(p)
    p.add_argument("--plan", help="seed MeshPlan JSON (default: decompose the target)")
    p.add_argument("--length", type=float)
    p.add_argument("--cost", choices=COST_KINDS, default="fidelity_cost")
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--method", choices=METHODS, default="lbfgs")
    p.set_defaults(func=cmd_optimize, needs_out=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, grid = load_settings(args.config)
        grid = resolve_grid(args, grid)
        if getattr(args, "needs_out", False) and args.out is None:
            args.out = Path("runs") / args.command
        if args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        args.func(args, config, grid)
    except ConvergenceError as exc:
        log.error("%s", exc)
        return 2
    except (ValueError, KeyError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
