"""Command-line interface: train, evaluate, and compare subcommands."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .core import DialogError
from .harness import (
    CompareResult,
    EvaluationReport,
    ExperimentConfig,
    compare,
    evaluate,
    load_config,
    train,
)
from .policy import QTable, Variant


def _base_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config.validate()
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    config = _base_config(args)
    variant = Variant(args.variant)
    result = train(config, variant)
    out = _out_dir(args)
    table_path = out / f"qtable_{variant.value}.json"
    result.qtable.save(table_path)
    status = "converged" if result.converged else "budget exhausted without convergence"
    print(f"{variant.value}: {status} after {result.episodes_to_convergence} episodes "
          f"({result.restarts} restarts); table -> {table_path}")
    return 0


def cmd_evaluate(args) -> int:
    config = _base_config(args)
    variant = Variant(args.variant)
    qtable = QTable.load(args.qtable)
    row = evaluate(qtable, config, variant, n_episodes=args.episodes)
    report = EvaluationReport(rows=(row,), eval_episodes=args.episodes or config.eval_episodes)
    out = _out_dir(args)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    return 0


def cmd_compare(args) -> int:
    config = _base_config(args)
    result: CompareResult = compare(config)
    out = _out_dir(args)
    for variant, table in result.tables.items():
        table.save(out / f"qtable_{variant.value}.json")
    (out / "report.csv").write_text(result.report.to_csv(), encoding="utf-8")
    (out / "report.txt").write_text(result.report.to_text(), encoding="utf-8")
    print(result.report.to_text(), end="")
    print(f"reports and tables written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="movietalk",
        description="Train and evaluate the movie-promotion dialog policy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults apply otherwise)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default="out", help="output directory")

    p_train = sub.add_parser("train", parents=[common], help="train one variant")
    p_train.add_argument("--variant", required=True,
                         choices=[v.value for v in Variant])
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", parents=[common],
                            help="evaluate a frozen Q table")
    p_eval.add_argument("--variant", required=True,
                        choices=[v.value for v in Variant])
    p_eval.add_argument("--qtable", required=True, help="path to a saved Q table")
    p_eval.add_argument("--episodes", type=int, default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_cmp = sub.add_parser("compare", parents=[common],
                           help="train and evaluate all three variants")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DialogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
