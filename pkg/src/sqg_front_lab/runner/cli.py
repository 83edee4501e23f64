"""``sqg-front-lab <preset> --config <path> --out <dir> [--seed N] [--list-presets]``.

Exit codes: 0 all thresholds met, 1 a threshold failed or the run raised,
2 bad invocation or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .bundle import write_bundle
from .config import ConfigError, from_mapping, parse_config
from .presets import PRESETS, run_preset

log = logging.getLogger("sqg_front_lab")


def run_experiment(cfg, out):
    """Run ``cfg.preset`` and write its bundle; returns ``(result, error)``."""
    result, error = None, None
    try:
        result = run_preset(cfg)
    except Exception as exc:  # recorded in the summary, reflected in the exit code
        log.error("preset %s failed: %s", cfg.preset, exc)
        error = exc
    write_bundle(out, cfg, result, error)
    return result, error


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqg-front-lab", description=__doc__.splitlines()[0])
    p.add_argument("preset", nargs="?", help="experiment preset name")
    p.add_argument("--config", help="YAML config layered over the preset defaults")
    p.add_argument("--out", help="bundle directory (default: runs/<preset>)")
    p.add_argument("--seed", type=int, help="seed for randomized probes")
    p.add_argument("--list-presets", action="store_true", help="list presets and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list_presets:
        for name, p in PRESETS.items():
            print(f"{name:12s} #{p.criterion:<3d} {p.summary}")
        return 0
    if not args.preset:
        print("error: a preset name is required (see --list-presets)", file=sys.stderr)
        return 2
    try:
        if args.config:
            cfg = parse_config(args.config, preset=args.preset)
        else:
            cfg = from_mapping({}, preset=args.preset, source="<defaults>")
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or f"runs/{cfg.preset}"
    result, error = run_experiment(cfg, out)
    if result is not None:
        for c in result.criteria:
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] #{c.id} {c.name}: {c.measured:.6g} {c.comparison} {c.threshold}")
        log.info("runtime %.1f s", result.runtime)
    ok = error is None and result is not None and result.passed
    print(f"bundle written to {out} ({'all thresholds met' if ok else 'thresholds not met'})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
