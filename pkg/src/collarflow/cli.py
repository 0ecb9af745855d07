"""Command line entry point: ``collarflow <command> ...``; all output is JSON."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import List, Optional

from . import oracle, stats
from .collar import collar_from_area, collar_from_width, max_collar_width
from .errors import CollarFlowError
from .flow import trace
from .hypcore import Hyperbolic, classify_and_axis
from .surface import describe, preset


def _simulate(args) -> int:
    config = stats.ExperimentConfig(
        preset=args.preset,
        word=args.target,
        sides=args.side,
        r_frac=args.r_frac,
        r0_frac=args.r0_frac,
        time=args.time,
        n_traj=args.trajectories,
        seed=args.seed,
        depth_grid=args.depth_grid,
        workers=args.workers,
    )
    report = stats.run_experiment(config)
    text = stats.dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.cdf_csv:
        with open(args.cdf_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "empirical", "theory"])
            for row in report["empirical"]["depth_cdf"]:
                writer.writerow([repr(row["r"]), repr(row["empirical"]), repr(row["theory"])])
    if args.dump_events:
        # the events of trajectory 0, regenerated from its seed
        setup = stats._Setup(config)
        child = stats.np.random.SeedSequence(config.seed).spawn(config.n_traj)[0]
        rng = stats.np.random.default_rng(child)
        log, _ = trace(setup.spec, setup.tables, stats.initial_state(stats.sample_initial(setup.spec, rng)), config.time)
        labels = [f"{config.word}@r", f"{config.word}@r0"]
        with open(args.dump_events, "w") as fh:
            fh.write(log.dump(labels) + "\n")
    return 0 if report["ok"] else 1


def _verify(args) -> int:
    consts = oracle.MeasureConstants(args.area_s, args.epsilon)
    report = oracle.verify_report(args.length, args.r, consts, args.tol)
    print(oracle.dumps(report))
    return 0 if report["ok"] else 1


def _geometry(args) -> int:
    if args.r is not None:
        spec = collar_from_width(args.length, args.r)
    elif args.area is not None:
        spec = collar_from_area(args.length, args.area)
    else:
        spec = None
    out = {"length": args.length, "max_width": max_collar_width(args.length)}
    if spec is not None:
        root, excess = spec.radical_forms()
        out.update(
            r=spec.r,
            phi=spec.phi,
            a=spec.a,
            b=spec.b,
            zeta=spec.zeta,
            area=spec.area,
            boundary_length=spec.boundary_length,
            radical_root=root,
            radical_excess=excess,
        )
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _preset_info(args) -> int:
    spec = preset(args.preset)
    info = describe(spec)
    lengths = {}
    for label, g in spec.generators.items():
        kind = classify_and_axis(g)
        lengths[label] = kind.length if isinstance(kind, Hyperbolic) else None
    info["generator_lengths"] = lengths
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collarflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo rates for a collar around a closed geodesic")
    p.add_argument("--preset", default="punctured-torus")
    p.add_argument("--target", default="A", help="generator word of the closed geodesic")
    p.add_argument("--side", choices=("A", "B", "both"), default="both")
    p.add_argument("--r-frac", type=float, default=0.4, help="collar width as a fraction of the embedding bound")
    p.add_argument("--r0-frac", type=float, default=0.8, help="collar width for the depth distribution")
    p.add_argument("--time", type=float, default=2.0e4)
    p.add_argument("--trajectories", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--dump-events", help="write the event log of trajectory 0 here")
    p.add_argument("--depth-grid", type=int, default=20)
    p.add_argument("--cdf-csv", help="also write the depth CDF table as CSV")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("verify-measure", help="quadrature checks of the section measures")
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--area-s", type=float, default=2.0 * math.pi)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_verify)

    p = sub.add_parser("geometry", help="collar constants for a geodesic length")
    p.add_argument("--length", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r", type=float)
    g.add_argument("--area", type=float)
    p.set_defaults(func=_geometry)

    p = sub.add_parser("preset-info", help="describe a built-in surface")
    p.add_argument("--preset", default="punctured-torus")
    p.set_defaults(func=_preset_info)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CollarFlowError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
