"""Command line front end.

Loads a scenario, applies command line overrides, runs it to termination and
writes the delimited output plus figures into the output directory.

Exit codes: 0 clean run, 1 scenario or network problems, 2 bad command line,
3 failures while stepping (audit drift, negative density, instability aborts).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .report import render_figures
from .results import write_outputs
from .scenario import ScenarioError, build_engine, load_scenario

_OVERRIDES = {
    "steps": "max_steps",
    "dt": "dt",
    "alpha": "alpha",
    "distributor": "distributor",
    "seed": "seed",
    "record_every": "record_every",
    "audit_tolerance": "audit_tolerance",
    "node_capacity": "node_capacity",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridflow",
        description="Run a mixed pedestrian and car network flow scenario.",
    )
    parser.add_argument("--scenario", required=True, metavar="FILE",
                        help="scenario JSON file")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: %(default)s)")
    parser.add_argument("--steps", type=int, metavar="N",
                        help="override maximum step count")
    parser.add_argument("--dt", type=float, metavar="SECONDS",
                        help="override the time step")
    parser.add_argument("--alpha", type=float, metavar="X",
                        help="override the downstream blend factor in [0, 1]")
    parser.add_argument("--distributor", choices=("fixed", "dijkstra"),
                        help="override the node distribution rule")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="override the random seed")
    parser.add_argument("--record-every", type=int, metavar="N",
                        dest="record_every",
                        help="override the snapshot cadence")
    parser.add_argument("--audit-tolerance", type=float, metavar="X",
                        dest="audit_tolerance",
                        help="override the relative drift tolerance")
    parser.add_argument("--node-capacity", choices=("finite", "infinite"),
                        dest="node_capacity",
                        help="override whether node buffers can fill up")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering, write only delimited files")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    overrides = {
        field: getattr(args, attr)
        for attr, field in _OVERRIDES.items()
        if getattr(args, attr) is not None
    }
    try:
        config = dataclasses.replace(scenario.config, **overrides)
    except ValueError as exc:
        parser.error(str(exc))

    try:
        engine = build_engine(scenario, config)
    except ValueError as exc:
        # covers invalid networks, bad demand and stability rejections
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        archive = engine.run()
    except RuntimeError as exc:
        # audit drift and negative density aborts surface here
        print(f"error: step {engine.step + 1}: {exc}", file=sys.stderr)
        return 3

    out_dir = Path(args.out)
    name = scenario.name or Path(args.scenario).stem
    written = list(write_outputs(archive, out_dir, name=name).values())
    if not args.no_figures:
        written.extend(render_figures(archive, scenario.network, out_dir))

    last = archive.audits[-1] if archive.audits else None
    print(f"{name}: {archive.termination} after {archive.steps_run} steps")
    print(f"  injected {archive.injected_persons:.6f} persons, "
          f"exited {archive.exited_persons:.6f}")
    if last is not None:
        print(f"  final drift {last.drift:.3e}, "
              f"in network {last.total_persons:.6f}")
    for path in written:
        print(f"  wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
