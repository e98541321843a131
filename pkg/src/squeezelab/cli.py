"""Command-line entry point: ``squeezelab <experiment> --config PATH`` and ``squeezelab schema``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import EXPERIMENTS, ConfigError, from_dict, list_schema
from .harness import EXIT_IO, EXIT_OK, EXIT_USAGE, default_workers, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="squeezelab", description="Generalized squeezing experiments.")
    p.add_argument("experiment", choices=list(EXPERIMENTS) + ["schema"])
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--workers", type=int, help="concurrent sweep members")
    p.add_argument("--method", choices=["spectral", "krylov", "reference"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.experiment == "schema":
        sys.stdout.write(list_schema())
        return EXIT_OK
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"config error: syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(data, dict):
        data.setdefault("experiment", args.experiment)
        if data["experiment"] != args.experiment:
            print(f"config error: .experiment: config says {data['experiment']!r}, command says {args.experiment!r}",
                  file=sys.stderr)
            return EXIT_USAGE
        for key, value in (("output_dir", args.out), ("workers", args.workers), ("method", args.method)):
            if value is not None:
                data[key] = value
        if args.workers is None and "workers" not in data:
            data["workers"] = default_workers()
    try:
        cfg = from_dict(data)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    record = run_experiment(cfg)
    for w in record.warnings:
        logging.warning(w)
    for e in record.errors:
        print(f"{e.get('error')}: {e.get('detail')}", file=sys.stderr)
    print(f"{cfg.experiment}: {record.status} -> {cfg.output_dir}")
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
