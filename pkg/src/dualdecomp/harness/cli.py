"""Command-line entry point: ``dualdecomp --preset case1-quantizer --out runs/``."""

import argparse
import sys

from ..algorithms import ALGORITHMS
from ..distortion import GENERATORS
from ..exceptions import ConfigError, DualDecompError
from .config import RULE_KINDS, RunConfig, parse_sweep
from .presets import PRESETS
from .runner import run_scenario

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dualdecomp",
        description="Simulate inexact dual decomposition and verify its convergence envelopes.",
    )
    ap.add_argument("--config", help="YAML or JSON run document; flags override its fields")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--algorithm", choices=ALGORITHMS)
    ap.add_argument("--rule", choices=RULE_KINDS, help="step-size schedule")
    ap.add_argument("--steps", type=int, help="iteration budget")
    ap.add_argument("--gamma", type=float, help="base step (default 1/L_h)")
    ap.add_argument("--p", type=float, help="decay exponent")
    ap.add_argument("--c", type=float, help="scale of the mu_h-scaled schedules")
    ap.add_argument("--bits", type=int, help="quantizer bits")
    ap.add_argument("--sigma", type=float, help="per-coordinate noise bound")
    ap.add_argument("--generator", choices=GENERATORS, help="noise generator")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, help="stop once ||d|| falls below this")
    ap.add_argument("--stride", type=int, help="keep every s-th record in the trace")
    ap.add_argument("--out", help="output directory (default ./out)")
    ap.add_argument("--sweep", help="one parameter and its values, e.g. p=0,0.5,1")
    ap.add_argument("--quiet", action="store_true")
    return ap


def config_from_args(args):
    overrides = {
        "preset": args.preset, "algorithm": args.algorithm, "rule": args.rule,
        "steps": args.steps, "gamma": args.gamma, "p": args.p, "c": args.c,
        "bits": args.bits, "sigma": args.sigma, "generator": args.generator,
        "seed": args.seed, "tol": args.tol, "stride": args.stride, "out": args.out,
        "sweep": parse_sweep(args.sweep) if args.sweep else None,
    }
    if args.config:
        return RunConfig.load(args.config, overrides)
    return RunConfig.from_dict({}, overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        result = run_scenario(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DualDecompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        for r in result.runs:
            fin = r.metrics.final()
            print(f"{r.label}: k={int(r.metrics.k[-1])} running_min_grad={fin['running_min_grad']:.6g} "
                  f"dual_gap={fin['dual_gap']:.6g} violations={len(r.violations)}")
        print(f"wrote {len(result.files)} files to {config.out}")
    first = result.first_violation
    if first is not None:
        label, v = first
        print(f"envelope violation: {v.check} at iteration {v.k} (run {label}); "
              f"{result.violation_count} in total", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
