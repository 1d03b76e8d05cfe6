"""Command-line entry point: ``msprofile run | pareto | road synth``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

import yaml

from .errors import MsProfileError
from .geometry import SyntheticRoadSpec, generate_synthetic_road
from .harness import (STATUS_INFEASIBLE, STATUS_OK, STATUS_SOLVER_FAILURE, RunMatrix,
                      read_summary, run_matrix, write_outputs, write_pareto)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER_FAILURE = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msprofile", description="Sickness-aware speed-profile optimisation")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a cost-function matrix over a road")
    run.add_argument("--config", help="YAML run matrix; omitted means the reference matrix")
    run.add_argument("--road", default=None, help="'synthetic' or a waypoint / spline CSV / GeoJSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="synthetic road seed")
    run.add_argument("--no-plots", action="store_true")

    par = sub.add_parser("pareto", help="recompute pareto.csv from a run directory")
    par.add_argument("--in", dest="in_dir", required=True)

    road = sub.add_parser("road", help="road utilities")
    road_sub = road.add_subparsers(dest="road_command", required=True)
    synth = road_sub.add_parser("synth", help="export a synthetic road as s,north,east,curvature CSV")
    synth.add_argument("--spec", help="YAML road spec")
    synth.add_argument("--out", default="road.csv")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--spacing", type=float, default=1.0)
    return ap


def _cmd_run(args) -> int:
    if args.config:
        matrix = RunMatrix.from_yaml(args.config, road=args.road, seed=args.seed)
    else:
        matrix = RunMatrix.from_mapping({}, road=args.road, seed=args.seed)
    outcomes = run_matrix(matrix, workers=args.workers)
    write_outputs(matrix, outcomes, args.out, plots=not args.no_plots)
    for o in outcomes:
        if o.status == STATUS_OK:
            print(f"{o.label:32s} {o.travel_time:9.2f} s  MSI {o.msi_max_unipg:7.3f}%  ISO {o.msi_max_iso:7.3f}%")
        else:
            print(f"{o.label:32s} {o.status}: {o.message}")
    statuses = {o.status for o in outcomes}
    if STATUS_SOLVER_FAILURE in statuses:
        return EXIT_SOLVER_FAILURE
    if STATUS_INFEASIBLE in statuses:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_pareto(args) -> int:
    rows = [SimpleNamespace(label=r["label"], travel_time=r["travel_time_s"],
                            msi_max_unipg=r["msi_max_unipg_pct"], msi_max_iso=r["msi_max_iso_pct"])
            for r in read_summary(args.in_dir) if r["status"] == STATUS_OK]
    path = write_pareto(rows, args.in_dir)
    print(path.read_text(), end="")
    return EXIT_OK


def _cmd_road(args) -> int:
    data = yaml.safe_load(Path(args.spec).read_text()) if args.spec else {}
    data = dict(data or {})
    if args.seed is not None:
        data["seed"] = args.seed
    road = generate_synthetic_road(SyntheticRoadSpec.from_mapping(data))
    road.export_csv(args.out, spacing=args.spacing)
    print(f"wrote {args.out} ({road.total_length:.1f} m)")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as an infeasible mission
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "pareto":
            return _cmd_pareto(args)
        return _cmd_road(args)
    except (MsProfileError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
