"""
Review insight extraction and summarisation
Command-line entry point
"""
import argparse
import logging
import sys
from typing import List, Optional
from cli.commands import bench, evaluate, extract, segment_rules, summarise, taxonomy
from core.config import settings
from core.errors import BackendError, BudgetError, EmbeddingError, InputError, TemplateError

logger = logging.getLogger("reviewsumm")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BACKEND = 2


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors become InputError so they share exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="reviewsumm",
        description="Extract aspect insights from multilingual reviews and summarise them",
    )
    parser.add_argument("--config", help="YAML config file (see config.example.yml)")
    parser.add_argument("--seed", type=int, help="Seed for every stochastic path")
    parser.add_argument("--verbose", action="store_true", help="Log progress and print the merged config")
    parser.add_argument("--backend", choices=["mock", "remote"], default="mock", help="Generation backend")
    parser.add_argument("--record", help="Record backend responses to this JSONL cassette")
    parser.add_argument("--replay", help="Answer prompts from this JSONL cassette")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in (extract, summarise, evaluate, bench, segment_rules, taxonomy):
        command.register(subparsers)
    return parser


def _configure_logging(verbose: bool):
    level = logging.INFO if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to an exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _configure_logging(args.verbose)
        return args.handler(args)
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (InputError, TemplateError, BudgetError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BackendError, EmbeddingError) as e:
        print(f"❌ backend failure: {e}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(run())
