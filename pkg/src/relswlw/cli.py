"""Command line: ``run``, ``audit``, ``convergence``, ``print-config``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from .config import config_help, parse_config, serialize_config
from .errors import ConfigError


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value configuration file")
    common.add_argument("--out", type=Path, help="output directory (overrides out_dir)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (overrides seed)")
    common.add_argument("--threads", type=int, help="cap on BLAS/FFT worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="relswlw",
        description="Coupled Dirac / relativistic Euler solver on periodic grids.",
        epilog="configuration keys (defaults):\n" + config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="evolve and write diagnostics, snapshots and a manifest")
    sub.add_parser("audit", parents=[common], help="check every invariant, print a JSON report")
    conv = sub.add_parser("convergence", parents=[common], help="errors and orders under grid refinement")
    conv.add_argument("--levels", type=int, default=3, help="number of refinement levels (>= 2)")
    sub.add_parser("print-config", parents=[common], help="print the effective configuration")
    return parser


def load_config(args):
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config(text)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    return replace(cfg, **overrides) if overrides else cfg


def _emit(report, out_dir, name):
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2

    with threadpool_limits(limits=args.threads):
        if args.command == "print-config":
            sys.stdout.write(serialize_config(cfg))
            return 0
        if args.command == "run":
            from .simulation import run

            result = run(cfg)
            if result.error is not None:
                print(f"error: {result.status}", file=sys.stderr)
            return result.exit_code
        if args.command == "audit":
            from .checks import audit

            report = audit(cfg)
            _emit(report, args.out, "audit.json")
            return 0 if report["passed"] else 1
        from .checks import convergence

        if args.levels < 2:
            print("error: --levels must be at least 2", file=sys.stderr)
            return 2
        _emit(convergence(cfg, args.levels), args.out, "convergence.json")
        return 0


if __name__ == "__main__":
    sys.exit(main())
