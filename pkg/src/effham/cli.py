"""Command-line entry point: ``effham {scan,grover,variational,oracle} --config FILE``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load
from .experiments import COMMANDS
from .variational import SingularSystemError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="effham", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "scan": "average-fidelity landscape over the (lambda, kappa) grid",
        "grover": "simulated amplitude-amplified search over candidates",
        "variational": "variational trajectory with optional Trotter reference",
        "oracle": "reference fixtures from dense diagonalization",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="YAML/JSON experiment config")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: config output.dir)")
        p.add_argument("--method", choices=["exact", "trotter", "variational"], default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("effham: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.method == "variational" and args.command != "scan":
        print("effham: error: --method variational only applies to scan", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load(args.config)
        out = args.out if args.out is not None else Path(config.output.dir)
        run = COMMANDS[args.command](config, out, method=args.method, threads=args.threads)
    except ConfigError as exc:
        print(f"effham: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"effham: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(run.summary, indent=2, sort_keys=True))
    print(f"wrote {', '.join(p.name for p in run.outputs)} and manifest.json to {run.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
