"""Command-line entry point: ``demofuse <command> --config FILE [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import load_config
from .model import ConfigurationError
from .pipeline import STAGES, StageError, run

log = logging.getLogger("demofuse")

COMMANDS = tuple(STAGES) + ("pipeline",)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demofuse", description="Small-area population estimation "
                                     "from linked administrative registers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="run configuration (YAML)")
    parser.add_argument("--seed", type=int, default=None, help="overrides the configured seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        for key, value in dict(cfg.applied_defaults).items():
            log.info("default %s = %r", key, value)
        run(args.command, cfg, args.out, args.seed)
    except StageError as exc:
        log.error("%s", exc)
        return 1
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
