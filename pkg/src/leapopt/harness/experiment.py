"""Experiment execution: multi-seed runs, summary statistics, comparisons,
landscape slices, and summary verification against raw logs.

File layout inside the output directory, per experiment:

  {problem}_{optimizer}_seed{S}.jsonl   one evaluation per line
  {problem}_{optimizer}_summary.csv     one row per seed + one aggregate row

The summary's wallclock column is the only nondeterministic field; everything
else is byte-stable for a fixed config.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from ..core import Budget, RunLog, make_rng, read_jsonl, write_jsonl
from ..optimizers import run_optimizer
from ..problems import get_problem
from .config import ConfigError, ExperimentConfig

__all__ = [
    "SeedOutcome",
    "run_experiment",
    "compare_experiments",
    "landscape_slice",
    "write_landscape_csv",
    "verify_outputs",
]

SUMMARY_FIELDS = ("seed", "best_loss", "steps_to_best", "wallclock_s", "ci95_best_loss")
AGGREGATE_LABEL = "mean"


@dataclass
class SeedOutcome:
    seed: int
    best_loss: float
    steps_to_best: int
    wallclock_s: float


def seed_log_name(problem: str, optimizer: str, seed: int) -> str:
    return f"{problem}_{optimizer}_seed{seed}.jsonl"


def summary_name(problem: str, optimizer: str) -> str:
    return f"{problem}_{optimizer}_summary.csv"


def aggregate_stats(best_losses) -> tuple:
    """Mean and normal-approximation 95% CI half-width over seeds."""
    arr = np.asarray(best_losses, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    ci = 1.96 * float(arr.std(ddof=1)) / np.sqrt(arr.size)
    return mean, float(ci)


def write_summary_csv(path, outcomes) -> None:
    mean, ci = aggregate_stats([o.best_loss for o in outcomes])
    mean_steps = float(np.mean([o.steps_to_best for o in outcomes]))
    mean_wall = float(np.mean([o.wallclock_s for o in outcomes]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for o in outcomes:
            writer.writerow([o.seed, o.best_loss, o.steps_to_best, o.wallclock_s, ""])
        writer.writerow([AGGREGATE_LABEL, mean, mean_steps, mean_wall, ci])


def run_experiment(config: ExperimentConfig, out_dir=None) -> list:
    """Run one optimizer over all seeds; write JSONL logs and a summary CSV."""
    out = Path(out_dir if out_dir is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)
    problem = get_problem(config.problem, **config.problem_options)
    outcomes = []
    for seed in config.seeds:
        budget = Budget(config.budget)
        log = RunLog(budget)
        started = time.perf_counter()
        result = run_optimizer(
            config.optimizer,
            problem,
            budget,
            rng=make_rng(seed),
            log=log,
            options=config.optimizer_options,
        )
        wall = time.perf_counter() - started
        write_jsonl(
            out / seed_log_name(config.problem, config.optimizer, seed),
            log,
            problem.bounds,
        )
        outcomes.append(
            SeedOutcome(seed, result.best_loss, result.steps_to_best, wall)
        )
    write_summary_csv(
        out / summary_name(config.problem, config.optimizer), outcomes
    )
    return outcomes


def _pairwise_p(reference, sample) -> float:
    """Two-sided Mann-Whitney p-value; degenerate all-tied samples give 1.0."""
    if np.all(np.asarray(reference) == np.asarray(sample)[0]) and np.all(
        np.asarray(sample) == np.asarray(sample)[0]
    ):
        return 1.0
    try:
        p = float(
            stats.mannwhitneyu(reference, sample, alternative="two-sided").pvalue
        )
    except ValueError:
        return 1.0
    return 1.0 if np.isnan(p) else p


def compare_experiments(configs, out_dir=None) -> dict:
    """Run several optimizers on one problem/budget and rank their results.

    Returns {"reference": name, "rows": [...]} where each row holds the
    optimizer name, median/mean/CI of best losses, and the Mann-Whitney
    p-value against the reference optimizer (bo-leap when present, else the
    first listed; empty for the reference row itself and for single-entry
    comparisons).
    """
    if not configs:
        raise ConfigError("compare needs at least one config")
    base = configs[0]
    for cfg in configs[1:]:
        if cfg.problem != base.problem or cfg.problem_options != base.problem_options:
            raise ConfigError("compare requires one shared problem across configs")
        if cfg.budget != base.budget:
            raise ConfigError("compare requires matching budgets across configs")
    out = Path(out_dir if out_dir is not None else base.out)
    all_best = []
    for cfg in configs:
        outcomes = run_experiment(cfg, out)
        all_best.append([o.best_loss for o in outcomes])
    names = [cfg.optimizer for cfg in configs]
    ref = names.index("bo-leap") if "bo-leap" in names else 0
    rows = []
    for i, name in enumerate(names):
        mean, ci = aggregate_stats(all_best[i])
        p_value = ""
        if len(configs) > 1 and i != ref:
            p_value = _pairwise_p(all_best[ref], all_best[i])
        rows.append(
            {
                "optimizer": name,
                "median_best_loss": float(np.median(all_best[i])),
                "mean_best_loss": mean,
                "ci95_best_loss": ci,
                "p_vs_reference": p_value,
            }
        )
    report = {"reference": names[ref], "rows": rows}
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["optimizer", "median_best_loss", "mean_best_loss", "ci95_best_loss",
             f"p_vs_{names[ref]}"]
        )
        for row in rows:
            writer.writerow(
                [row["optimizer"], row["median_best_loss"], row["mean_best_loss"],
                 row["ci95_best_loss"], row["p_vs_reference"]]
            )
    return report


def landscape_slice(
    problem_name: str,
    dims: tuple,
    resolution: int,
    base_point=None,
    problem_options: dict = None,
) -> list:
    """Evaluate a 2D grid over dims (i, j) with the other dims held at base.

    Returns rows (x_i, x_j, loss, g_i, g_j, g_norm) in problem coordinates;
    gradient entries are None for gradient-free problems.  g_norm is the
    magnitude of the in-slice gradient (g_i, g_j).
    """
    if resolution < 2:
        raise ConfigError("resolution must be at least 2")
    problem = get_problem(problem_name, **(problem_options or {}))
    dim_i, dim_j = dims
    if dim_i == dim_j:
        raise ConfigError("landscape dims must be distinct")
    for d in (dim_i, dim_j):
        if not 0 <= d < problem.dimension:
            raise ConfigError(
                f"dim {d} out of range for {problem_name} (dimension {problem.dimension})"
            )
    bounds = problem.bounds
    if base_point is None:
        base = (bounds.lower + bounds.upper) / 2.0
    else:
        base = np.asarray(base_point, dtype=float)
        if base.shape != (problem.dimension,):
            raise ConfigError("base point must match the problem dimension")
        base = bounds.clamp(base)
    xs = np.linspace(bounds.lower[dim_i], bounds.upper[dim_i], resolution)
    ys = np.linspace(bounds.lower[dim_j], bounds.upper[dim_j], resolution)
    rows = []
    for a in xs:
        for b in ys:
            point = base.copy()
            point[dim_i] = a
            point[dim_j] = b
            loss, grad = problem.evaluate(point)
            if grad is None:
                g_i = g_j = g_norm = None
            else:
                g_i = float(grad[dim_i])
                g_j = float(grad[dim_j])
                g_norm = float(np.hypot(g_i, g_j))
            rows.append((float(a), float(b), float(loss), g_i, g_j, g_norm))
    return rows


def write_landscape_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_i", "x_j", "loss", "g_i", "g_j", "g_norm"])
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def _recompute_from_log(path) -> tuple:
    records = read_jsonl(path)
    losses = np.array([r["loss"] for r in records], dtype=float)
    best_idx = int(np.argmin(losses))
    return float(losses[best_idx]), best_idx + 1


def verify_outputs(out_dir) -> list:
    """Recompute every summary in `out_dir` from its JSONL logs and diff.

    Returns a list of human-readable mismatch strings (empty when clean).
    The wallclock column is excluded from the comparison.
    """
    out = Path(out_dir)
    summaries = sorted(out.glob("*_summary.csv"))
    if not summaries:
        return [f"no summary files found under {out}"]
    problems = []
    for summary in summaries:
        stem_parts = summary.name[: -len("_summary.csv")].split("_")
        if len(stem_parts) != 2:
            problems.append(f"{summary.name}: unrecognized summary file name")
            continue
        problem, optimizer = stem_parts
        with open(summary, newline="") as fh:
            rows = list(csv.DictReader(fh))
        seed_rows = [r for r in rows if r["seed"] != AGGREGATE_LABEL]
        agg_rows = [r for r in rows if r["seed"] == AGGREGATE_LABEL]
        recomputed = []
        for row in seed_rows:
            log_path = out / seed_log_name(problem, optimizer, int(row["seed"]))
            if not log_path.exists():
                problems.append(f"{summary.name}: missing log {log_path.name}")
                continue
            best, steps = _recompute_from_log(log_path)
            recomputed.append(best)
            if float(row["best_loss"]) != best:
                problems.append(
                    f"{summary.name} seed {row['seed']}: best_loss "
                    f"{row['best_loss']} != recomputed {best!r}"
                )
            if int(row["steps_to_best"]) != steps:
                problems.append(
                    f"{summary.name} seed {row['seed']}: steps_to_best "
                    f"{row['steps_to_best']} != recomputed {steps}"
                )
        if len(agg_rows) != 1:
            problems.append(f"{summary.name}: expected exactly one aggregate row")
            continue
        if len(recomputed) == len(seed_rows):
            mean, ci = aggregate_stats(recomputed)
            if float(agg_rows[0]["best_loss"]) != mean:
                problems.append(
                    f"{summary.name}: aggregate mean {agg_rows[0]['best_loss']} "
                    f"!= recomputed {mean!r}"
                )
            if float(agg_rows[0]["ci95_best_loss"]) != ci:
                problems.append(
                    f"{summary.name}: aggregate ci95 {agg_rows[0]['ci95_best_loss']} "
                    f"!= recomputed {ci!r}"
                )
    return problems
