#!/usr/bin/env python3
"""
hardylab command-line entry point

    hardylab <command> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]

Exit codes: 0 when every contract passes, 2 on a contract violation or a
numerical error, 1 on a usage or configuration error.
"""

import sys
import json
import logging
import argparse
from typing import List, Optional

from dotenv import load_dotenv

from projects.hardylab import __version__
from projects.hardylab.cli.commands import COMMANDS, run
from projects.hardylab.cli.config import load_config
from projects.hardylab.core.environment_utils import configure_logging
from projects.hardylab.core.errors import (
    EXIT_CONFIG,
    EXIT_CONTRACT,
    EXIT_OK,
    HardylabError,
    create_error_report,
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; hardylab reserves 2 for contract failures"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hardylab", description="Matrix-weighted variable Hardy space experiments")
    parser.add_argument("--version", action="version", version=f"hardylab {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", required=True, help="Experiment configuration JSON")
    parser.add_argument("--out", default=None, help="Output directory (default HARDYLAB_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, default=None, help="Run seed, unsigned 64-bit")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default HARDYLAB_THREADS)")
    parser.add_argument("--log-level", default=None, help="Override HARDYLAB_LOG_LEVEL")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    configure_logging(args.log_level)

    try:
        config = load_config(args.config)
        manifest = run(args.command, config, out_dir=args.out, seed=args.seed, threads=args.threads)
    except HardylabError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        sys.stderr.write(json.dumps(create_error_report(e, args.command), sort_keys=True) + "\n")
        return e.exit_code
    except Exception as e:
        logger.exception(f"❌ Unexpected error in {args.command}")
        sys.stderr.write(json.dumps(create_error_report(e, args.command), sort_keys=True) + "\n")
        return EXIT_CONTRACT

    return EXIT_OK if manifest.passed else EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
