import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from errors import StgBenchError
from manager import COMMANDS, BenchmarkManager
from models import load_run_config
from tracing import get_tracer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stgbench",
        description="Spatial-temporal graph forecasting benchmark pipeline",
    )
    parser.add_argument("command", choices=COMMANDS, help="pipeline step to run")
    parser.add_argument("--config", required=True, help="INI run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the benchmark CLI.
    Validates the whole configuration, then runs one pipeline step.
    Returns 0 on success, 2 on input or configuration errors and 3 on
    state or compatibility errors.
    """
    args = build_parser().parse_args(argv)
    tracer = get_tracer()
    try:
        config = load_run_config(args.config, seed=args.seed)
        BenchmarkManager(config, tracer=tracer).run(args.command)
    except StgBenchError as e:
        tracer.console.print(f"error: {e}", style="bold red", markup=False)
        return e.exit_code
    if tracer.verbose and tracer.events:
        tracer.console.print(tracer.get_summary(), style="dim", markup=False)
    return 0


if __name__ == "__main__":
    sys.exit(main())
