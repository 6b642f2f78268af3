"""Command-line entry point: adapter --mode stub --table FILE."""

import argparse
import sys

from .config import AdapterConfig, AdapterError
from .serve import serve


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, matching the driving engine's convention
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="adapter",
        description="Trainer process speaking newline-delimited JSON on "
                    "stdin/stdout.")
    parser.add_argument("--mode", required=True, choices=("stub", "finetune"),
                        help="stub replays a recorded table; finetune is a "
                             "documented extension point")
    parser.add_argument("--table",
                        help="JSON file of recorded curves (stub mode)")
    parser.add_argument("--model",
                        help="model to fine-tune (informational in this build)")
    parser.add_argument("--device",
                        help="compute device (informational in this build)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(mode=args.mode, table=args.table,
                               model=args.model, device=args.device)
        return serve(config)
    except (AdapterError, NotImplementedError) as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1
