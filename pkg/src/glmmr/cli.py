"""Command-line entry point: ``glmmr run`` and ``glmmr compare``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from dataclasses import fields

from .errors import ConfigError, GlmMhdError, IncompatibleRuns
from .problems import PROBLEMS
from .runner import MODES, RunConfig, compare, load_config_file, run

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 3


def _snapshot_times(text):
    try:
        return tuple(float(s) for s in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad snapshot list {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="glmmr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="advance a problem to t_end")
    r.add_argument("--config", help="key=value file; flags given here override it")
    r.add_argument("--problem", choices=sorted(PROBLEMS))
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--level", type=int)
    r.add_argument("--threshold-mode", choices=("constant", "harten"))
    r.add_argument("--epsilon", type=float)
    r.add_argument("--epsilon0", type=float)
    r.add_argument("--gamma", type=float)
    r.add_argument("--cfl", type=float)
    r.add_argument("--cp2-over-ch", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--snapshots", type=_snapshot_times, help="comma separated output times")
    r.add_argument("--out")
    r.add_argument("--psi-damp-per-stage", action=argparse.BooleanOptionalAction, default=None)

    c = sub.add_parser("compare", help="L1 density error of a run against a reference run")
    c.add_argument("run_dir")
    c.add_argument("ref_dir")
    c.add_argument("--json", action="store_true", help="print the report as JSON")
    return parser


def config_from_args(args):
    values = load_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def _fail(code, kind, message, **extra):
    report = {"error": kind, "message": message, **extra}
    print(json.dumps(report), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "compare":
        try:
            report = compare(args.run_dir, args.ref_dir)
        except (IncompatibleRuns, FileNotFoundError) as exc:
            return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
        if args.json:
            print(json.dumps(report, indent=2, sort_keys=True))
        else:
            print(f"L1 density error : {report['l1_density_error']:.6e}")
            print(f"D_c              : {report['compression']:.2f} %")
            print(f"peak memory      : {report['peak_memory']} cells")
        return EXIT_OK

    try:
        config = config_from_args(args)
    except (ConfigError, TypeError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    try:
        result = run(config)
    except GlmMhdError as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, str(exc),
                     where=getattr(exc, "where", None), out=config.out,
                     trace=traceback.format_exc(limit=3))
    last = result.records[-1]
    print(f"{config.mode} L={config.level} t={last.t:.6g} steps={len(result.records)} "
          f"D_c={result.compression:.2f}% peak_memory={result.peak_memory} -> {config.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
