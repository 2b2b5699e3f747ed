"""Command-line entry point: ``qcdma <scenario> [--config PATH] [--seed U64] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, DivergenceError
from .experiments import SCENARIOS

log = logging.getLogger("qcdma")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _add_common(p, defaults):
    # Sub-commands repeat the global flags with suppressed defaults so a flag
    # given before the sub-command is not reset by the sub-parser.
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", metavar="PATH", default=d(None), help="JSON experiment configuration")
    p.add_argument("--seed", type=_u64, metavar="U64", default=d(None),
                   help="override the configured seed")
    p.add_argument("--out", metavar="DIR", default=d(None), help="output directory")
    p.add_argument("--workers", type=int, default=d(1), help="worker processes for sweeps")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser():
    parser = argparse.ArgumentParser(prog="qcdma",
                                     description="Chaotic-phase CDMA entanglement distribution.")
    _add_common(parser, True)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fig4": "correction factors and Lyapunov exponent versus bandwidth",
        "fig5": "fidelity over (M, n) and along the bandwidth sweep",
        "fig6": "fidelity versus channel loss",
        "sync": "Pecora-Carroll synchronisation traces",
        "distribute": "single protocol run, JSON result",
        "oracle-check": "compare the branch simulator with the number-basis oracle",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text), False)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.out)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        result = SCENARIOS[args.command](cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    for path in result.paths:
        print(path)
    if result.summary.get("passed") is False:
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
