"""Command line: ``run``, ``sweep``, ``price`` and ``validate-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import SCHEMA, ConfigError, load_config, price_american, run_experiment, sweep, _jsonable


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--preset", help="preset name (overrides the file)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed for synthetic controls")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="fracobstacle", description="Fractional parabolic obstacle problem experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run a preset or configuration")
    sp = sub.add_parser("sweep", parents=[common], help="vary one numeric field")
    sp.add_argument("--axis", help="field to vary (default: sweep_axis)")
    sp.add_argument("--values", help="comma list of values (default: sweep_values)")
    sub.add_parser("price", parents=[common], help="price an American option (default preset american-put)")
    vp = sub.add_parser("validate-config", parents=[common], help="resolve and check a configuration")
    vp.add_argument("--schema", action="store_true", help="print the key reference and exit")
    return ap


def _overrides(args) -> dict:
    out = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(item, "override must read KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if args.out is not None:
        out["out"] = args.out
    if args.seed is not None:
        out["seed"] = str(args.seed)
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate-config" and args.schema:
        for k, desc in SCHEMA.items():
            print(f"{k:20s} {desc}")
        return 0
    preset = args.preset
    if args.command == "price" and preset is None and args.config is None:
        preset = "american-put"
    try:
        cfg = load_config(args.config, _overrides(args), preset)
        if args.command == "validate-config":
            print(json.dumps(_jsonable(cfg.to_dict()), sort_keys=True, indent=2))
            return 0
        if args.command == "sweep":
            values = None
            if args.values is not None:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            outcome = sweep(cfg, args.axis, values)
        elif args.command == "price":
            if cfg.obstacle not in ("put", "call-spread"):
                raise ConfigError("obstacle", "price needs a put or call-spread obstacle")
            outcome = price_american(cfg)
        else:
            outcome = run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for name in outcome.hard_failures:
        print(f"hard failure: {name}", file=sys.stderr)
    for name in outcome.soft_failures:
        print(f"soft failure: {name}", file=sys.stderr)
    print(json.dumps(_jsonable(outcome.summary), sort_keys=True))
    return outcome.status
