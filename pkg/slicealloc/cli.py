"""
slicealloc command line.

    slicealloc sweep  [--config FILE] [--seed N] [--out DIR]
    slicealloc solve  [--network FILE --slices FILE | --tenants T] [--method jra|dra]
    slicealloc admit  [--network FILE --slices FILE | --tenants T] [--method jra|dra]
    slicealloc oracle [--max-nodes 2] [--max-slices 2] [--instances 200]

Exit codes: 0 ok, 1 error, 2 usage, 3 a solve hit its time limit,
4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from .admission import run_ac_jra
from .disjoint import run_dra_pipeline
from .errors import ConfigError, SliceAllocError
from .harness import ScenarioConfig, acceptance_gap, collapse_thresholds, run_sweep
from .jra import build_jra_model, solve_jra
from .milp import SOLVER_NAMES, check_solver
from .oracle import run_oracle
from .report import emit_all
from .slices import RequestBatch
from .topology import PhysicalNetwork

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIME_LIMIT = 3
EXIT_ORACLE_MISMATCH = 4

OUTPUT_DIR_ENV = "SLICEALLOC_OUTPUT_DIR"


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.solver is not None:
        overrides["solver"] = args.solver
    if args.time_limit is not None:
        overrides["time_limit"] = args.time_limit
    for name in ("replications", "workers", "nodes", "tenant_max"):
        value = getattr(args, name, None)
        if value is not None:
            overrides["node_count" if name == "nodes" else name] = value
    config = replace(config, **overrides)
    check_solver(config.solver)
    return config


def scenario(args: argparse.Namespace, config: ScenarioConfig):
    if (args.network is None) != (args.slices is None):
        raise ConfigError("--network and --slices go together")
    if args.network is not None:
        return PhysicalNetwork.load(args.network), RequestBatch.load(args.slices)
    network, batch = config.scenario(0, args.tenants)
    if args.save is not None:
        args.save.mkdir(parents=True, exist_ok=True)
        (args.save / "network.json").write_text(network.to_json())
        (args.save / "slices.json").write_text(batch.to_json())
        logger.info("saved scenario to %s", args.save)
    return network, batch


def print_json(data: Any):
    print(json.dumps(data, indent=2, allow_nan=True))


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args)
    out = args.out or Path(os.environ.get(OUTPUT_DIR_ENV, "results"))
    records = run_sweep(config)
    for path in emit_all(records, out):
        print(f"wrote {path}")
    print(f"acceptance gap (JRA - DRA): {acceptance_gap(records):.3f}")
    for replication, threshold in collapse_thresholds(records).items():
        print(f"replication {replication}: DRA collapse at {threshold} tenants")
    limited = sum(r.time_limited for r in records)
    if limited:
        print(f"{limited} cells hit the time limit", file=sys.stderr)
        return EXIT_TIME_LIMIT
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    config = load_config(args)
    network, batch = scenario(args, config)
    match args.method:
        case "jra":
            admission = run_ac_jra(network, batch, config.solver, config.time_limit)
            if args.dump_lp is not None:
                model = build_jra_model(network, admission.accepted, config.weights)
                args.dump_lp.write_text(model.dump_lp())
            if admission.time_limited:
                print_json({"method": "JRA", "admission": admission.to_dict()})
                return EXIT_TIME_LIMIT
            result = solve_jra(
                network, admission.accepted, config.weights, config.solver, config.time_limit
            )
            print_json(
                {
                    "method": "JRA",
                    "admission": admission.to_dict(),
                    "status": result.solution.status.value,
                    "placement": None if result.placement is None else result.placement.to_dict(),
                    "cost": None if result.cost is None else result.cost.to_dict(),
                }
            )
            return EXIT_TIME_LIMIT if result.time_limited else EXIT_OK
        case "dra":
            dra = run_dra_pipeline(
                network, batch, config.weights, config.solver, config.time_limit
            )
            print_json(dra.to_dict())
            return EXIT_TIME_LIMIT if dra.time_limited else EXIT_OK


def cmd_admit(args: argparse.Namespace) -> int:
    config = load_config(args)
    network, batch = scenario(args, config)
    match args.method:
        case "jra":
            outcome = run_ac_jra(network, batch, config.solver, config.time_limit)
            print_json({"method": "JRA", "admission": outcome.to_dict()})
            time_limited = outcome.time_limited
        case "dra":
            dra = run_dra_pipeline(
                network, batch, config.weights, config.solver, config.time_limit
            )
            link = dra.link_stage.admission
            print_json(
                {
                    "method": "DRA",
                    "nodes": dra.node_stage.admission.to_dict(),
                    "links": None if link is None else link.to_dict(),
                    "collapse": dra.collapse_flag,
                }
            )
            time_limited = dra.time_limited
    return EXIT_TIME_LIMIT if time_limited else EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    solver = args.solver or "internal"
    check_solver(solver)
    report = run_oracle(
        instances=args.instances,
        max_nodes=args.max_nodes,
        max_slices=args.max_slices,
        max_vms=args.max_vms,
        seed=args.seed or 0,
        solver=solver,
    )
    for mismatch in report.mismatches:
        print(mismatch)
    print(f"{report.checked} checks, {len(report.mismatches)} mismatches")
    return EXIT_OK if report.ok else EXIT_ORACLE_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--config", type=Path, metavar="FILE", help="scenario config JSON")
    common.add_argument("--solver", choices=SOLVER_NAMES, help="MILP back end")
    common.add_argument("--time-limit", type=float, metavar="SEC", help="per-solve limit")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    scenario_args = argparse.ArgumentParser(add_help=False)
    scenario_args.add_argument("--network", type=Path, metavar="FILE", help="topology JSON")
    scenario_args.add_argument("--slices", type=Path, metavar="FILE", help="request batch JSON")
    scenario_args.add_argument("--tenants", type=int, default=4, help="tenants to generate")
    scenario_args.add_argument("--nodes", type=int, help="cloud nodes to generate")
    scenario_args.add_argument("--method", choices=("jra", "dra"), default="jra")
    scenario_args.add_argument(
        "--save", type=Path, metavar="DIR", help="write the generated scenario here"
    )

    parser = argparse.ArgumentParser(
        prog="slicealloc", description="Network slice allocation and admission control"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", parents=[common], help="run the JRA vs DRA sweep")
    sweep.add_argument("--out", type=Path, metavar="DIR", help="output directory")
    sweep.add_argument("--replications", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--tenant-max", type=int, dest="tenant_max")
    sweep.set_defaults(func=cmd_sweep)

    solve = sub.add_parser(
        "solve", parents=[common, scenario_args], help="admit and place one scenario"
    )
    solve.add_argument("--dump-lp", type=Path, metavar="FILE", help="write the JRA model")
    solve.set_defaults(func=cmd_solve)

    admit = sub.add_parser(
        "admit", parents=[common, scenario_args], help="admission control only"
    )
    admit.set_defaults(func=cmd_admit)

    oracle = sub.add_parser(
        "oracle", parents=[common], help="cross-check solvers against enumeration"
    )
    oracle.add_argument("--max-nodes", type=int, default=2)
    oracle.add_argument("--max-slices", type=int, default=2)
    oracle.add_argument("--max-vms", type=int, default=2)
    oracle.add_argument("--instances", type=int, default=200)
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (SliceAllocError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
