"""Command-line entry point: ``qpcsim [--config FILE] [flags]``.

Values are resolved as built-in defaults, then the JSON config file, then
explicit flags; later sources win.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .errors import ConfigError
from .harness import ExperimentSpec, emit, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

_CODE_NAMES = {"identity": "identity", "rep3": "rep3", "hamming74": "hamming74"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpcsim", description="Run seeded private-comparison experiments.")
    p.add_argument("--config", type=Path, help="JSON file with ExperimentSpec fields")
    p.add_argument("--variant", choices=["original", "improved"])
    p.add_argument("--code", choices=sorted(_CODE_NAMES))
    p.add_argument("--n", type=int, help="input word length in bits")
    p.add_argument("--r", type=int, help="decoy photons per sequence")
    p.add_argument("--noise", type=float, help="per-qubit bit-flip probability in transit")
    p.add_argument("--threshold", type=float, help="decoy error-rate abort threshold (default: derived from noise)")
    p.add_argument("--adversary", choices=["none", "thcnot", "mr"])
    p.add_argument("--knowledge", choices=["faithful", "public"])
    p.add_argument("--perm-mode", dest="perm_mode", choices=["shared", "independent"])
    p.add_argument("--announce", choices=["public", "private"], help="how the message order is disclosed")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--inputs", help="exhaustive | random | fixed:X,Y")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, help="output file (stdout JSON when omitted)")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    return p


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    values: dict = {}
    if args.config is not None:
        try:
            values.update(json.loads(args.config.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{args.config}: {exc}") from None
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError("config", f"unknown fields {sorted(unknown)}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    spec = ExperimentSpec(**values)
    spec.validate()
    return spec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_spec(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    report = run_experiment(spec, workers=args.workers)
    if args.out is None:
        json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    try:
        emit(report, args.format, args.out)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
