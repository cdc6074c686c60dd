"""Batch studies: Haar ensembles, DFT length thresholds, parallel Hadamards.

Every study returns plain rows and can write them as CSV next to a JSON run
manifest.  Row order is fixed by the inputs, never by worker scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .clements import decompose, rotation
from .linalg import HAAR_ALGORITHM, dft_matrix, fidelity, gate_metrics, haar_random_unitary
from .model import PhysicalConfig, frodo_block, kappa
from .optimize import OptimizationProblem, optimize
from .synthesis import projected_gate, synthesize, threshold_length

log = logging.getLogger(__name__)

THRESHOLD_LEVELS = (0.99, 0.999, 0.9999)
PERCENTILES = (5, 50, 95)
METRICS = ("fidelity", "success_prob", "uniformity")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    grid: dict
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")


def check_grid(lengths: Sequence[float]) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or lengths.size == 0:
        raise ValueError("length grid is empty")
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
        raise ValueError("lengths must be finite and positive")
    if np.any(np.diff(lengths) <= 0):
        raise ValueError("lengths must be strictly increasing")
    return lengths


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- random ensembles ---------------------------------------------------------

def _ensemble_sample(args):
    index, target, config, lengths = args
    plan = decompose(target)
    rows = []
    for length in lengths:
        cfg = config.with_length(length)
        m = gate_metrics(target, projected_gate(plan, cfg))
        rows.append((index, length, kappa(cfg), m.fidelity, m.success_prob, m.uniformity))
    return rows


ENSEMBLE_HEADER = ("sample", "L_m", "kappa", "fidelity", "success_prob", "uniformity")


def summarize(records, lengths, config: PhysicalConfig) -> list[tuple]:
    """Per-length percentile rows (5th, median, 95th) for each metric."""
    by_length = {float(l): [] for l in lengths}
    for rec in records:
        by_length[rec[1]].append(rec[3:6])
    out = []
    for length, vals in by_length.items():
        arr = np.array(vals)
        row = [length, kappa(config.with_length(length))]
        for j in range(3):
            row.extend(np.percentile(arr[:, j], PERCENTILES).tolist())
        out.append(tuple(row))
    return out


def summary_header() -> tuple[str, ...]:
    cols = ["L_m", "kappa"]
    for metric in METRICS:
        cols += [f"{metric}_p05", f"{metric}_median", f"{metric}_p95"]
    return tuple(cols)


def run_random_ensemble(n: int, samples: int, lengths, seed: int,
                        config: PhysicalConfig | None = None, workers: int = 1):
    """Score ``samples`` Haar-random N x N targets at every length.

    Returns (records, summary).  Targets are drawn in order from one
    generator seeded with ``seed``.
    """
    if n < 2:
        raise ValueError("ensemble dimension must be >= 2")
    if samples < 1:
        raise ValueError("need at least one sample")
    lengths = check_grid(lengths)
    config = config or PhysicalConfig()
    config.window_offset_for(n)
    rng = np.random.default_rng(seed)
    targets = [haar_random_unitary(n, rng) for _ in range(samples)]
    work = [(i, t, config, lengths.tolist()) for i, t in enumerate(targets)]
    records = [row for rows in _map(_ensemble_sample, work, workers) for row in rows]
    return records, summarize(records, lengths, config)


# -- DFT study ------------------------------------------------------------------

DFT_HEADER = ("n", "L_m", "kappa", "family", "fidelity", "success_prob", "uniformity", "status")
THRESHOLD_HEADER = ("n", "family", "metric", "level", "threshold_L_m")


def _dft_point(args):
    n, length, config, do_opt, budget, method = args
    target = dft_matrix(n)
    plan = decompose(target)
    cfg = config.with_length(length)
    k = kappa(cfg)
    m = synthesize(plan, cfg, target, keep_full=False).metrics
    rows = [(n, length, k, "analytic", m.fidelity, m.success_prob, m.uniformity, "")]
    if do_opt:
        for family, kind in (("opt_fidelity", "fidelity_cost"), ("opt_uniformity", "uniformity_cost")):
            res = optimize(OptimizationProblem(target, cfg, plan, kind, budget=budget, method=method))
            om = res.result.metrics
            if res.status == "budget_exhausted":
                log.info("n=%d L=%.4g %s: optimizer budget exhausted", n, length, kind)
            rows.append((n, length, k, family, om.fidelity, om.success_prob, om.uniformity, res.status))
    return rows


# which metric each family is judged on
_FAMILY_METRICS = {
    "analytic": ("fidelity", "uniformity"),
    "opt_fidelity": ("fidelity",),
    "opt_uniformity": ("uniformity",),
}


def dft_thresholds(rows, levels=THRESHOLD_LEVELS) -> list[tuple]:
    out = []
    col = {name: i for i, name in enumerate(DFT_HEADER)}
    keys = sorted({(r[0], r[3]) for r in rows}, key=lambda k: (k[0], list(_FAMILY_METRICS).index(k[1])))
    for n, family in keys:
        sel = sorted((r for r in rows if r[0] == n and r[3] == family), key=lambda r: r[1])
        for metric in _FAMILY_METRICS[family]:
            curve = [(r[1], r[col[metric]]) for r in sel]
            for level in levels:
                out.append((n, family, metric, level, threshold_length(curve, level)))
    return out


def footnote_violations(rows, level: float = 0.99) -> list[tuple]:
    """Rows with fidelity >= level but success probability <= level."""
    return [r for r in rows if r[4] >= level and not r[5] > level]


def run_dft_study(n_list: Sequence[int], lengths, optimize_flag: bool = False,
                  thresholds=THRESHOLD_LEVELS, seed: int | None = 0,
                  config: PhysicalConfig | None = None, budget: int = 300,
                  method: str = "lbfgs", workers: int = 1):
    """DFT targets over a length grid, with optional optimized families.

    Returns (rows, threshold rows, footnote violations).  ``seed`` is only
    recorded; every step is deterministic.
    """
    lengths = check_grid(lengths)
    if any(n < 2 for n in n_list):
        raise ValueError("each dimension must be >= 2")
    config = config or PhysicalConfig()
    for n in n_list:
        config.window_offset_for(n)
    work = [(int(n), float(l), config, optimize_flag, budget, method) for n in n_list for l in lengths]
    rows = [row for rows in _map(_dft_point, work, workers) for row in rows]
    exhausted = [r for r in rows if r[7] == "budget_exhausted"]
    if exhausted:
        # the status column marks each affected point
        log.warning("optimizer budget (%d) exhausted at %d of %d optimized points",
                    budget, len(exhausted), len(rows) - len(work))
    return rows, dft_thresholds(rows, thresholds), footnote_violations(rows)


# -- parallel Hadamards -------------------------------------------------------------

HADAMARD_HEADER = ("kappa", "ell", "kappa_ell", "fidelity", "leakage")
HADAMARD_THETA = np.pi / 4


def run_parallel_hadamard(kappa_grid, rung_range, seed: int | None = 0):
    """Per-rung fidelity of the pi/4 FRODO block against the ideal 2x2 beamsplitter.

    ``leakage`` is the off-diagonal modulus |F_21| of the rung block.
    """
    kappas = np.asarray(kappa_grid, dtype=float)
    rungs = np.asarray(rung_range, dtype=int)
    if kappas.ndim != 1 or kappas.size == 0 or not np.all(np.isfinite(kappas)) or np.any(kappas < 0):
        raise ValueError("kappa grid must be a nonempty list of finite nonnegative values")
    if 0 not in rungs:
        raise ValueError("rung range must include ell = 0")
    ideal = rotation(HADAMARD_THETA, 0.0)
    rows = []
    for k in kappas:
        blocks = frodo_block(HADAMARD_THETA, 0.0, k * rungs)
        for ell, blk in zip(rungs, blocks):
            rows.append((float(k), int(ell), float(k * ell) + 0.0, fidelity(ideal, blk), float(abs(blk[1, 0]))))
    return rows


def save_run(out_dir: Path, command: str, config: PhysicalConfig | None, seed, grid: dict,
             tables: dict[str, tuple[Sequence[str], list]], started: float, extra=None) -> RunManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        config=config.to_dict() if config else {},
        seed=seed,
        grid=grid,
        extra=extra or {},
    )
    for name, (header, rows) in tables.items():
        path = out_dir / name
        write_csv(path, header, rows)
        manifest.outputs.append(str(path))
    manifest.extra.setdefault("haar_algorithm", HAAR_ALGORITHM)
    manifest.duration_s = time.perf_counter() - started
    manifest.write(out_dir / f"{command}_manifest.json")
    return manifest
