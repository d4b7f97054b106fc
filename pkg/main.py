"""
Gauss-Newton Trainer - Main Entry Point
Run with: python main.py train --config runs/iris_gn.conf
"""

import argparse
import logging
import sys

from app.commands import check, compare, datasets, train
from app.config import settings
from app.errors import ConfigError
from app.runconfig import load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gn-trainer",
        description="Train feed-forward networks with steepest descent, improved Gauss-Newton or LM",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level (env: LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training configuration")
    p_train.add_argument("--config", required=True, help="key=value run file")
    p_train.add_argument("--preset", choices=["iris", "wine"], help="preset whose values act as defaults")
    p_train.add_argument("--out", help="trace CSV path (overrides output_path)")
    p_train.add_argument("--seed", type=int, help="seed (overrides the file)")

    p_compare = sub.add_parser("compare", help="run two configurations and tabulate them")
    p_compare.add_argument("--config-a", required=True)
    p_compare.add_argument("--config-b", required=True)
    p_compare.add_argument("--preset", choices=["iris", "wine"])
    p_compare.add_argument("--out", help="comparison CSV path")
    p_compare.add_argument("--seed", type=int, help="seed for both runs")

    p_export = sub.add_parser("export-dataset", help="write the bundled iris or wine data as CSV")
    p_export.add_argument("name", choices=["iris", "wine"])
    p_export.add_argument("path")

    p_check = sub.add_parser("check-gradients", help="verify gradients and Jacobians against finite differences")
    p_check.add_argument("--instances", type=int, default=20)
    p_check.add_argument("--seed", type=int, default=0)

    return parser


def _overrides(args, **extra) -> dict:
    values = {"preset": getattr(args, "preset", None), "seed": args.seed}
    values.update(extra)
    return {k: v for k, v in values.items() if v is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        if args.command == "train":
            config = load_config(args.config, _overrides(args, output_path=args.out))
            return train.run(config)
        if args.command == "compare":
            config_a = load_config(args.config_a, _overrides(args))
            config_b = load_config(args.config_b, _overrides(args))
            return compare.compare(config_a, config_b, args.out)
    except ConfigError as e:
        print(f"error: ConfigError: {e.detail}", file=sys.stderr)
        return e.exit_code

    if args.command == "export-dataset":
        return datasets.export_dataset(args.name, args.path)
    return check.check_gradients(args.instances, args.seed)


if __name__ == "__main__":
    sys.exit(main())
