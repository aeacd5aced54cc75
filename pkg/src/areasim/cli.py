"""Command-line entry point: ``areasim --config run.json``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import config as config_mod
from .config import ConfigError
from .experiments import run_experiment


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("--seeds", f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="areasim", description=__doc__)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--experiment", choices=config_mod.EXPERIMENTS, help="override the config's experiment")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seeds", help="comma-separated seeds (overrides seeds)")
    p.add_argument("--quiet", action="store_true", help="only print errors")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config)
        overrides = {}
        if args.experiment:
            overrides["experiment"] = args.experiment
        if args.seeds is not None:
            overrides["seeds"] = _parse_seeds(args.seeds)
        if args.out:
            overrides["output_dir"] = args.out
        cfg = config_mod.validate(replace(cfg, **overrides))
    except FileNotFoundError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: invalid config key {exc.key!r}: {exc}", file=sys.stderr)
        return 2
    summary = run_experiment(cfg)
    if not args.quiet:
        print(json.dumps({"experiment": cfg.experiment, "output_dir": cfg.output_dir,
                          "n_points": len(summary.get("points", summary.get("rows", [])))}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
