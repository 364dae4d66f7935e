"""Command-line interface: run, landscape, compare, verify.

Exit code 0 on success, 2 on any config or registry error (unknown names
print the registry listing on stderr).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..optimizers import optimizer_names
from ..problems import problem_names
from .config import ConfigError, ExperimentConfig, load_config_file
from .config import _parse_value as parse_config_value
from .experiment import (
    compare_experiments,
    landscape_slice,
    run_experiment,
    summary_name,
    verify_outputs,
    write_landscape_csv,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leapopt",
        description="Global optimization benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one optimizer over seeds")
    run_p.add_argument("--config", help="experiment config file")
    run_p.add_argument("--problem", help="problem name (overrides config)")
    run_p.add_argument("--optimizer", help="optimizer name (overrides config)")
    run_p.add_argument("--budget", type=int, help="evaluations per seed")
    run_p.add_argument("--seeds", help="int count, a:b range, or comma list")
    run_p.add_argument("--out", help="output directory")

    land_p = sub.add_parser("landscape", help="export a 2D loss/gradient slice")
    land_p.add_argument("--config", help="config file supplying problem options")
    land_p.add_argument("--problem", help="problem name (overrides config)")
    land_p.add_argument("--dims", default="0,1", help="two dims as i,j")
    land_p.add_argument("--resolution", type=int, default=50)
    land_p.add_argument(
        "--base", help="comma-separated base point in problem coordinates"
    )
    land_p.add_argument("--out", help="output CSV path or directory")

    cmp_p = sub.add_parser("compare", help="rank several optimizers head-to-head")
    cmp_p.add_argument(
        "--config",
        action="append",
        required=True,
        help="experiment config; repeat once per optimizer",
    )
    cmp_p.add_argument("--out", help="output directory")

    ver_p = sub.add_parser("verify", help="recompute summaries from raw logs")
    ver_p.add_argument("--out", required=True, help="directory holding run outputs")
    return parser


def _experiment_config(args) -> ExperimentConfig:
    mapping = load_config_file(args.config) if args.config else {}
    if args.problem:
        mapping["problem.name"] = args.problem
    if args.optimizer:
        mapping["optimizer.name"] = args.optimizer
    if args.budget is not None:
        mapping["run.budget"] = args.budget
    if args.seeds is not None:
        # Same parsing as config files, so "--seeds 3" is a count of 3.
        mapping["run.seeds"] = parse_config_value(args.seeds)
    if args.out:
        mapping["run.out"] = args.out
    return ExperimentConfig.from_mapping(mapping)


def _cmd_run(args) -> int:
    config = _experiment_config(args)
    outcomes = run_experiment(config)
    for o in outcomes:
        print(
            f"seed {o.seed}: best_loss {o.best_loss:.6g} "
            f"steps_to_best {o.steps_to_best} wallclock {o.wallclock_s:.2f}s"
        )
    print(
        f"wrote {summary_name(config.problem, config.optimizer)} "
        f"({len(outcomes)} seeds) to {config.out}"
    )
    return 0


def _cmd_landscape(args) -> int:
    mapping = load_config_file(args.config) if args.config else {}
    problem = args.problem or mapping.get("problem.name")
    if not problem:
        raise ConfigError("landscape needs --problem or problem.name in the config")
    problem_options = {
        key.split(".", 1)[1]: value
        for key, value in mapping.items()
        if key.startswith("problem.") and key != "problem.name"
    }
    try:
        dims = tuple(int(v) for v in args.dims.split(","))
    except ValueError:
        raise ConfigError(f"bad --dims {args.dims!r}; expected i,j") from None
    if len(dims) != 2:
        raise ConfigError(f"bad --dims {args.dims!r}; expected exactly two dims")
    base = None
    if args.base:
        try:
            base = [float(v) for v in args.base.split(",")]
        except ValueError:
            raise ConfigError(f"bad --base {args.base!r}") from None
    rows = landscape_slice(
        problem, dims, args.resolution, base_point=base, problem_options=problem_options
    )
    default_name = f"landscape_{problem}_d{dims[0]}_d{dims[1]}.csv"
    if args.out and args.out.endswith(".csv"):
        out_path = Path(args.out)
    else:
        out_dir = Path(args.out) if args.out else Path(".")
        out_path = out_dir / default_name
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_landscape_csv(out_path, rows)
    print(f"wrote {len(rows)} cells to {out_path}")
    return 0


def _cmd_compare(args) -> int:
    configs = [
        ExperimentConfig.from_mapping(load_config_file(path)) for path in args.config
    ]
    out_dir = args.out if args.out else configs[0].out
    report = compare_experiments(configs, out_dir)
    header = (
        f"{'optimizer':<16} {'median':>12} {'mean':>12} {'ci95':>10} "
        f"{'p vs ' + report['reference']:>14}"
    )
    print(header)
    for row in report["rows"]:
        p = row["p_vs_reference"]
        p_text = f"{p:.4f}" if p != "" else "-"
        print(
            f"{row['optimizer']:<16} {row['median_best_loss']:>12.5g} "
            f"{row['mean_best_loss']:>12.5g} {row['ci95_best_loss']:>10.4g} "
            f"{p_text:>14}"
        )
    print(f"wrote compare.csv to {out_dir}")
    return 0


def _cmd_verify(args) -> int:
    mismatches = verify_outputs(args.out)
    if mismatches:
        for line in mismatches:
            print(line, file=sys.stderr)
        return 1
    print(f"all summaries under {args.out} match their logs")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "landscape": _cmd_landscape,
        "compare": _cmd_compare,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, KeyError, ValueError, TypeError, FileNotFoundError) as exc:
        # Registry errors carry the known-name listing in their message.
        message = exc.args[0] if exc.args else str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main(argv=None))
