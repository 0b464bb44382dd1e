"""Command-line entry points.

Subcommands:
  train    --config <file> [--seed-override N] [--workers N]
  compare  <dir_a> <dir_b> --out <dir>
  theory   --grid <file> [--out <dir>]
  oracle value-iteration --env <name> [--gamma G] [--tol T]

Exit codes: 0 success, 1 validation error, 2 invariant/acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner, theorysim
from .config import ConfigError, load_run_config
from .envs import UnsupportedEnvError, state_values, tabular_mdp, value_iteration

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVARIANT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alignrl")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run a seeded training experiment")
    train.add_argument("--config", required=True, help="path to a run config JSON file")
    train.add_argument("--seed-override", type=int, default=None,
                       help="run only this seed instead of the config's list")
    train.add_argument("--output-dir", default=None, help="override the config's output_dir")
    train.add_argument("--workers", type=int, default=1,
                       help="seed-level process parallelism (default: serial)")

    compare = sub.add_parser("compare", help="compare two result directories")
    compare.add_argument("dir_a")
    compare.add_argument("dir_b")
    compare.add_argument("--out", required=True, help="directory for curves.csv and summary.json")

    theory = sub.add_parser("theory", help="closed-form vs Monte Carlo grid for the update model")
    theory.add_argument("--grid", required=True, help="path to a grid config JSON file")
    theory.add_argument("--out", default=None, help="directory for theory_results.csv")

    oracle = sub.add_parser("oracle", help="exact planning oracles")
    oracle_sub = oracle.add_subparsers(dest="oracle_command", required=True)
    vi = oracle_sub.add_parser("value-iteration", help="tabular Q* for an environment")
    vi.add_argument("--env", required=True, help="gridworld5 or chain5")
    vi.add_argument("--gamma", type=float, default=None,
                    help="discount override (default: the environment's)")
    vi.add_argument("--tol", type=float, default=1e-10, help="Bellman residual tolerance")
    return parser


def _cmd_train(args) -> int:
    config = load_run_config(args.config)
    if args.seed_override is not None:
        config.seeds = [args.seed_override]
        config.validate()
    results = runner.run_training(config, output_dir=args.output_dir, workers=args.workers)
    for result in results:
        print(
            f"seed {result.seed}: final eval score "
            f"{result.final_eval_score:.4f} -> {result.metrics_path}"
        )
    return EXIT_OK


def _cmd_compare(args) -> int:
    report = runner.compare_runs(args.dir_a, args.dir_b)
    runner.write_comparison(report, args.out)
    for label, arm in (("A", report.arm_a), ("B", report.arm_b)):
        print(f"arm {label} ({arm.directory}): median_final={arm.median_final:.4f} "
              f"iqr_final={arm.iqr_final:.4f}")
    print(f"wrote {Path(args.out) / 'curves.csv'} and summary.json")
    return EXIT_OK


def _load_grid_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"grid config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid config {path} is not valid JSON: {exc}") from exc
    known = {"lambdas", "cs", "n_samples", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"grid config: unknown field(s) {sorted(unknown)}")
    for key in ("lambdas", "cs"):
        if key not in doc or not doc[key]:
            raise ConfigError(f"{key}: field is required and must be nonempty")
    doc.setdefault("n_samples", 1_000_000)
    doc.setdefault("seed", 0)
    if int(doc["n_samples"]) < 1:
        raise ConfigError(f"n_samples: must be >= 1, got {doc['n_samples']}")
    for lam in doc["lambdas"]:
        if not 0.5 < float(lam) < 1.0:
            raise ConfigError(f"lambdas: each value must lie in (0.5, 1), got {lam}")
    for c in doc["cs"]:
        if not 0.0 <= float(c) <= 1.0:
            raise ConfigError(f"cs: each value must lie in [0, 1], got {c}")
    return doc


def _cmd_theory(args) -> int:
    grid = _load_grid_config(args.grid)
    results = theorysim.run_grid(
        [float(x) for x in grid["lambdas"]],
        [float(x) for x in grid["cs"]],
        int(grid["n_samples"]),
        int(grid["seed"]),
    )
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "theory_results.csv"
    theorysim.write_results_csv(results, out_path)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "ok" if r.passed else f"FAIL ({r.failure_text})"
        print(f"lambda={r.lam} c={r.c}: {status}")
    print(f"wrote {out_path}")
    if failed:
        print(f"{len(failed)} of {len(results)} grid cells violated an invariant")
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_oracle_value_iteration(args) -> int:
    mdp = tabular_mdp(args.env)
    if args.gamma is not None:
        gamma = args.gamma
    else:
        gamma = {"gridworld5": 0.99, "chain5": 1.0}[args.env]
    q = value_iteration(mdp, gamma, args.tol)
    values = state_values(q)
    print(f"env={args.env} gamma={gamma} tol={args.tol}")
    print("state values:")
    for s, v in enumerate(values):
        print(f"  state {s}: {v:.10f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "theory":
            return _cmd_theory(args)
        if args.command == "oracle":
            return _cmd_oracle_value_iteration(args)
    except (ConfigError, UnsupportedEnvError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
