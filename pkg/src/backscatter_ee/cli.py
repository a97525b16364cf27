"""Command line entry point: ``solve``, ``sweep``, ``validate``, ``list-sweeps``.

Exit codes: 0 success, 1 bad input or config, 2 ``validate`` failed its gate.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SeedSpec, sample_realization
from .harness import (FULL_REALIZATIONS, SCHEME_SOLVERS, SCHEMES, ConfigError, SweepSpec,
                      builtin_sweeps, geometry_from_config, load_config, params_from_config,
                      resolve_config, run_and_emit)
from .optimizer import SolverConfig
from .oracle import GAP_FIELDS, certify

EXIT_OK, EXIT_INPUT, EXIT_GATE = 0, 1, 2


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backscatter-ee", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one channel realization")
    p.add_argument("--config", type=Path, help="key = value parameter file")
    p.add_argument("--seed", type=_u64, default=0, help="channel seed (default 0)")
    p.add_argument("--index", type=int, default=0, help="realization index under the seed")
    p.add_argument("--scheme", choices=SCHEMES, default="proposed")
    p.add_argument("--literal", action="store_true",
                   help="restrict HtT to the unsaturated range (may be infeasible)")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--name", help="built-in sweep name (see list-sweeps)")
    src.add_argument("--spec", type=Path, help="JSON sweep spec")
    p.add_argument("--realizations", type=_positive)
    p.add_argument("--full-scale", action="store_true", help=f"use {FULL_REALIZATIONS} realizations")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--dump-realizations", action="store_true",
                   help="also write one row per realization")

    p = sub.add_parser("validate", help="check the solver against the grid oracle")
    p.add_argument("--instances", type=_positive, default=200)
    p.add_argument("--k-max", type=_positive, default=3)
    p.add_argument("--grid", type=_positive, default=500)
    p.add_argument("--seed", type=_u64, default=7)
    p.add_argument("--out", type=Path, default=Path("results"))

    sub.add_parser("list-sweeps", help="print the built-in sweeps")
    return parser


def _solve(args) -> int:
    cfg = resolve_config(load_config(args.config) if args.config else None)
    params = params_from_config(cfg)
    geometry = geometry_from_config(cfg, params.num_bns)
    channels = sample_realization(params, geometry, SeedSpec(args.seed, args.index), cfg["pathloss_model"])
    result = SCHEME_SOLVERS[args.scheme](params, channels, SolverConfig(saturation=not args.literal))
    a, ev = result.allocation, result.evaluation
    # report reflections in the caller's BN numbering, not SIC order
    beta = np.empty(params.num_bns)
    beta[channels.order] = np.asarray(a.reflection).reshape(-1)
    out = {
        "scheme": args.scheme,
        "mode": result.mode.value,
        "energy_efficiency": result.energy_efficiency,
        "sum_rate": float(ev.sum_rate),
        "total_energy": float(ev.total_energy),
        "source_power": float(a.source_power),
        "sleep_fraction": float(a.sleep_fraction),
        "active_fraction": float(a.active_fraction),
        "reflection": beta.tolist(),
        "iterations": result.iterations,
        "converged": result.converged,
        "alpha_trace": list(result.alpha_trace),
    }
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for key, value in out.items():
            if key != "alpha_trace":
                print(f"{key:18s} {value}")
    return EXIT_OK


def _sweep(args) -> int:
    if args.name:
        sweeps = builtin_sweeps()
        if args.name not in sweeps:
            raise ConfigError(f"name: unknown sweep {args.name!r}; try list-sweeps")
        spec = sweeps[args.name]
    else:
        try:
            spec = SweepSpec.from_dict(json.loads(args.spec.read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read spec {args.spec}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec {args.spec}: invalid JSON: {exc}") from exc
    if args.full_scale and args.realizations:
        raise ConfigError("give either --realizations or --full-scale, not both")
    if args.full_scale:
        spec = spec.with_(realizations=FULL_REALIZATIONS)
    elif args.realizations:
        spec = spec.with_(realizations=args.realizations)
    if args.seed is not None:
        spec = spec.with_(master_seed=args.seed)
    path = run_and_emit(spec.validate(), args.out, workers=args.workers, fmt=args.format,
                        dump_realizations=args.dump_realizations)
    print(path)
    return EXIT_OK


def _validate(args) -> int:
    cert = certify(args.instances, args.k_max, args.grid, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "oracle_gaps.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GAP_FIELDS)
        for row in cert.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    print(f"instances within {cert.tolerance:.0%}: {cert.within_tolerance:.4f} "
          f"(need {cert.required_fraction})")
    print(f"largest solver excess over grid: {cert.max_excess:.3e} "
          f"(resolution bound {cert.resolution_bound:.3e})")
    print(f"wrote {path}")
    print("PASS" if cert.passed else "FAIL")
    return EXIT_OK if cert.passed else EXIT_GATE


def _list_sweeps(args) -> int:
    for name, spec in builtin_sweeps().items():
        values = f"{spec.values[0]:g}..{spec.values[-1]:g} ({len(spec.values)} points)"
        print(f"{name:24s} {spec.variable:22s} {values:22s} K={list(spec.k_values)} "
              f"schemes={','.join(spec.schemes)}")
    return EXIT_OK


COMMANDS = {"solve": _solve, "sweep": _sweep, "validate": _validate, "list-sweeps": _list_sweeps}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for a failed gate here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
