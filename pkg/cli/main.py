#!/usr/bin/env python
"""
IBP toolkit command line.

Usage:
    python -m cli train --config configs/blobs_quick.json --out runs/blobs
    python -m cli eval --config configs/blobs_quick.json --eval.checkpoint runs/blobs/checkpoint.ibp
    python -m cli audit --out runs/audit --audit.trials 20
    python -m cli gradcheck --config configs/gradcheck_tiny.json

Any ``--section.field value`` after the known flags overrides the config file.
"""

import argparse
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from cli.commands import COMMANDS, EXIT_FAILURE, EXIT_USAGE
from cli.overrides import load_run_config, parse_overrides
from utils.exceptions import IBPToolkitError, NumericError
from utils.logger import get_logger

logger = get_logger("CLI")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Interval bound propagation training, evaluation and initialization audits"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "Train a network with the IBP objective",
        "eval": "Standard and verified error of a checkpoint",
        "audit": "Difference-gain table and per-layer bound profile at initialization",
        "gradcheck": "Compare analytic and central-difference gradients of the objective",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        cmd.add_argument("--out", type=Path, default=None, help="Output directory (overrides output.dir)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)

    try:
        overrides = parse_overrides(extra)
        if args.out is not None:
            overrides["output.dir"] = str(args.out)
        cfg = load_run_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_FAILURE
    except IBPToolkitError as e:
        # config, checkpoint, parse, build and argument errors
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
