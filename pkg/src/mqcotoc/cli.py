"""Command line entry point: ``mqcotoc {run,preset,validate,resume,overlay}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import yaml

from .config import ConfigError, RunConfig, apply_overrides, load_config
from .overlay import OverlayError
from .presets import PRESETS, preset
from .runner import RunError, add_overlay, resume, run


def _override_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. times.n_t=21 or rings.0.N=10")
    p.add_argument("--output-dir", help="shortcut for --set output.dir=...")
    p.add_argument("--workers", type=int, help="shortcut for --set workers=...")


def _shortcuts(args) -> list[str]:
    extra = list(args.overrides)
    if args.output_dir:
        extra.append(f"output.dir={args.output_dir}")
    if args.workers:
        extra.append(f"workers={args.workers}")
    return extra


def _summary(manifest: dict) -> str:
    return json.dumps({k: manifest[k] for k in ("status", "config_hash", "warnings")}, indent=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqcotoc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run a config file")
    p.add_argument("config")
    _override_args(p)

    p = sub.add_parser("preset", help="print (or run) a figure preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--estimator", choices=("exact", "stochastic"), default="exact")
    p.add_argument("--exact-max-n", type=int, default=12)
    p.add_argument("--stochastic-max-n", type=int, default=14)
    p.add_argument("--write", metavar="PATH", help="save the config instead of printing it")
    p.add_argument("--run", action="store_true", help="run the preset immediately")
    _override_args(p)

    p = sub.add_parser("validate", help="check a config without computing")
    p.add_argument("config")
    _override_args(p)

    p = sub.add_parser("resume", help="finish or refresh an existing output directory")
    p.add_argument("run_dir")

    p = sub.add_parser("overlay", help="attach a reference CSV to an existing run")
    p.add_argument("run_dir")
    p.add_argument("csv")
    p.add_argument("--x-kind", choices=("phi", "t"), default="phi")
    p.add_argument("--x-column", default="phi")
    p.add_argument("--value-column", default="M")
    p.add_argument("--label", default="reference")
    p.add_argument("--x-units")
    p.add_argument("--value-units")
    p.add_argument("--at", type=float, help="time (phi curves) or phase (t curves) of the simulated curve")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "run":
            manifest = run(load_config(args.config, _shortcuts(args)))
            print(_summary(manifest))
        elif args.verb == "validate":
            cfg = load_config(args.config, _shortcuts(args))
            n = len(cfg.step_counts())
            print(f"ok: {len(cfg.rings)} ring(s), {n} time point(s), estimator {cfg.estimator.kind}")
        elif args.verb == "preset":
            cfg, info = preset(args.name, args.exact_max_n, args.stochastic_max_n, args.estimator)
            cfg = RunConfig.from_dict(apply_overrides(cfg.to_dict(), _shortcuts(args)))
            if args.write:
                with open(args.write, "w") as fh:
                    fh.write(cfg.to_yaml())
            elif not args.run:
                sys.stdout.write(cfg.to_yaml())
            if args.run:
                print(_summary(run(cfg, {"preset_caps": info})))
        elif args.verb == "resume":
            print(_summary(resume(args.run_dir)))
        elif args.verb == "overlay":
            units = {k: v for k, v in (("x", args.x_units), ("value", args.value_units)) if v}
            spec = {"path": args.csv, "x_kind": args.x_kind, "x_column": args.x_column,
                    "value_column": args.value_column, "label": args.label, "units": units, "at": args.at}
            print(_summary(add_overlay(args.run_dir, spec)))
    except (ConfigError, OverlayError, yaml.YAMLError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
