"""Command-line entry point: ``qsw-memory <kind> --config run.yaml``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import yaml

from .config import KINDS, ConfigError, parse_config
from .runner import OUTPUT_ENV, ExperimentError, output_root, run_experiment, sweep


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="YAML experiment config (defaults apply when omitted)")
    p.add_argument("--out", metavar="DIR", help=f"output directory (default: ${OUTPUT_ENV} or ./qsw_runs)")
    p.add_argument("--threads", metavar="K", type=int, default=1, help="worker processes")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="reject unknown config keys (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="warn about unknown config keys instead")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsw-memory", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    sw = sub.add_parser("sweep", help="repeat an experiment over values of one numeric field")
    _common(sw)
    sw.add_argument("--axis", required=True, help="dotted config field, e.g. cycle.ramp_time")
    sw.add_argument("--values", required=True, nargs="+", type=float, help="values to sweep")
    return parser


def _load_text(path):
    if path is None:
        return ""
    return Path(path).read_text()


def _coerce_value(v: float):
    return int(v) if float(v).is_integer() else v


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("always")
    try:
        text = _load_text(args.config)
        if args.command == "sweep":
            raw = yaml.safe_load(text) or {}
            out = Path(args.out) if args.out else output_root() / f"sweep-{raw.get('kind', 'run')}"
            manifest = sweep(raw, args.axis, [_coerce_value(v) for v in args.values], out,
                             threads=args.threads, strict=args.strict)
        else:
            cfg = parse_config(text, strict=args.strict, kind=args.command)
            out = Path(args.out) if args.out else output_root() / args.command
            manifest = run_experiment(cfg, out, threads=args.threads)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    json.dump({k: v for k, v in manifest.to_dict().items() if k != "files"}, sys.stdout, indent=1)
    print()
    print(f"wrote {len(manifest.files)} files to {out}", file=sys.stderr)
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
