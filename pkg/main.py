"""Unified Graph Wind Forecasting - コマンドラインエントリポイント"""

import argparse
import sys
from typing import List, Optional

from src.cli import commands
from src.config.manager import ConfigManager
from src.utils.exceptions import ForecastError, ValidationError
from src.utils.logger import Logger

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FAILURE = 2

SUBCOMMANDS = ("generate", "corrupt", "train", "evaluate", "report")


def build_parser() -> argparse.ArgumentParser:
    """引数パーサーを作成する"""
    parser = argparse.ArgumentParser(
        description="Spatio-temporal unified graph wind forecasting"
    )
    parser.add_argument("command", choices=SUBCOMMANDS, help="Subcommand to run")
    parser.add_argument(
        "--config", default="config/config.yaml", help="Configuration file path"
    )
    parser.add_argument(
        "--rate", type=float, help="Run a single missing rate instead of the configured list"
    )
    parser.add_argument(
        "--seed", type=int, help="Run a single seed (generate: synthetic data seed)"
    )
    parser.add_argument(
        "--jobs", type=int, default=1, help="Number of experiment cells run in parallel"
    )
    parser.add_argument("--out", help="Output directory for run artifacts")
    return parser


def apply_overrides(config: ConfigManager, args: argparse.Namespace) -> None:
    """コマンドライン引数で設定を上書きする（ファイルには保存しない）"""
    if args.rate is not None:
        config.override("training", "missing_rates", [args.rate])
    if args.seed is not None:
        if args.command == "generate":
            config.override("synthetic", "seed", args.seed)
        else:
            config.override("training", "seeds", [args.seed])
    if args.out is not None:
        config.override("output", "directory", args.out)


def run(args: argparse.Namespace) -> None:
    """サブコマンドを実行する"""
    config = ConfigManager(args.config)
    logging_config = config.get_logging_config()
    logger = Logger(
        "ugwf", log_file=logging_config["file"], level=str(logging_config["level"])
    )
    apply_overrides(config, args)
    if args.jobs < 1:
        raise ValidationError(f"--jobs は1以上である必要があります: {args.jobs}")

    logger.log_info(f"Running {args.command} with {args.config}")
    if args.command == "generate":
        commands.generate(config)
    elif args.command == "corrupt":
        commands.corrupt(config)
    elif args.command == "train":
        commands.train(config, args.jobs)
    elif args.command == "evaluate":
        commands.evaluate(config, args.jobs)
    else:
        commands.report(config)
    logger.log_info(f"{args.command} completed")


def main(argv: Optional[List[str]] = None) -> int:
    """メインアプリケーション

    Returns:
        終了コード（0: 成功, 1: 入力・設定エラー, 2: 実行時エラー）
    """
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ForecastError as e:
        Logger("ugwf").log_error(f"{args.command} failed: {e}")
        print(f"Runtime error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        Logger("ugwf").log_error(f"{args.command} failed unexpectedly: {e}")
        print(f"Unexpected error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
