"""
Brute-force cross-checks for tiny instances.

`brute_force` enumerates VM hosts and VL paths directly and scores each
candidate with the independent cost model; `enumerate_binary` walks every
0/1 vector of a pure-binary model. Both are exponential and only meant for
a handful of variables.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .disjoint import run_dma
from .errors import InfeasibleAfterAdmission, ModelError
from .jra import (
    CostWeights,
    Objective,
    Placement,
    compute_costs,
    formulate,
    verify_placement,
)
from .milp import TOLERANCE, MilpModel, MilpSolution, Relation, SolveStatus, solve_milp
from .slices import DemandParams, RequestBatch, generate_batch
from .topology import PhysicalNetwork, TopologyParams, generate_random_topology

logger = logging.getLogger(__name__)


class Problem(Enum):
    JOINT = "joint"
    NODES = "nodes"  # power only
    LINKS = "links"  # routing over a fixed placement


MAX_ENUMERATED_BITS = 22
CHUNK_BITS = 14


def enumerate_binary(model: MilpModel) -> MilpSolution:
    """Exact optimum of a model whose free variables are all binary."""
    if any(not v.is_binary for v in model.variables):
        raise ModelError(f"{model.name}: enumeration needs a pure-binary model")
    free = np.array([v.id for v in model.variables if not v.is_fixed], dtype=int)
    if free.size > MAX_ENUMERATED_BITS:
        raise ModelError(f"{model.name}: {free.size} free binaries is too many to enumerate")

    base, _ = model.bounds()
    c = model.cost_vector()
    A, relations, b = model.matrix()
    scale = TOLERANCE * np.maximum(1.0, np.abs(b))
    le = np.array([r is Relation.LE for r in relations], dtype=bool)
    ge = np.array([r is Relation.GE for r in relations], dtype=bool)
    eq = np.array([r is Relation.EQ for r in relations], dtype=bool)

    best: np.ndarray | None = None
    best_value = math.inf
    # bit i of the counter drives free[i]; chunks keep memory bounded
    total = 1 << free.size
    chunk = 1 << min(CHUNK_BITS, free.size)
    for start in range(0, total, chunk):
        counter = np.arange(start, start + chunk, dtype=np.int64)
        bits = (counter[:, None] >> np.arange(free.size)) & 1
        X = np.tile(base, (chunk, 1))
        X[:, free] = bits
        lhs = X @ A.T
        ok = np.ones(chunk, dtype=bool)
        if le.any():
            ok &= (lhs[:, le] <= b[le] + scale[le]).all(axis=1)
        if ge.any():
            ok &= (lhs[:, ge] >= b[ge] - scale[ge]).all(axis=1)
        if eq.any():
            ok &= (np.abs(lhs[:, eq] - b[eq]) <= scale[eq]).all(axis=1)
        if not ok.any():
            continue
        values = np.where(ok, X @ c, np.inf)
        i = int(np.argmin(values))
        margin = TOLERANCE * max(1.0, abs(best_value)) if best is not None else 0.0
        if best is None or values[i] < best_value - margin:
            best_value = float(values[i])
            best = X[i].copy()

    if best is None:
        return MilpSolution(SolveStatus.INFEASIBLE, nodes=total)
    return MilpSolution(SolveStatus.OPTIMAL, best, model.evaluate(best), nodes=total)


@dataclass(frozen=True)
class BruteForceResult:
    objective: float
    placement: Placement


def _route_choices(network: PhysicalNetwork, batch: RequestBatch, hosts: dict):
    vls = list(batch.vls())
    options = [
        [p.key for p in network.paths_between(hosts[a], hosts[b])]
        for a, b in (vl.vm_keys for vl in vls)
    ]
    for choice in itertools.product(*options):
        yield {vl.key: path for vl, path in zip(vls, choice)}


def brute_force(
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights | None = None,
    problem: Problem = Problem.JOINT,
    fixed_placement: Placement | None = None,
) -> BruteForceResult | None:
    """
    Optimum of the joint, node-only (power) or link-only (routing over
    a fixed placement) by enumeration; None when nothing is feasible.
    Nodes are switched on exactly where VMs land, except for LINKS
    where gamma comes from the fixed placement.
    """
    problem = Problem(problem)
    if problem is Problem.LINKS and fixed_placement is None:
        raise ValueError("the link-only problem needs a fixed placement")
    weights = weights or CostWeights()
    vms = [vm.key for vm in batch.vms()]

    if problem is Problem.LINKS:
        host_choices = [tuple(fixed_placement.host(vm) for vm in vms)]
    else:
        host_choices = itertools.product(network.node_ids, repeat=len(vms))

    best: BruteForceResult | None = None
    for choice in host_choices:
        hosts = dict(zip(vms, choice))
        if problem is Problem.NODES:
            route_options = [{}]
        else:
            route_options = _route_choices(network, batch, hosts)
        for routes in route_options:
            placement = Placement.build(
                network, batch, hosts, None if problem is Problem.NODES else routes
            )
            if problem is Problem.LINKS:
                placement = Placement(
                    placement.xi, dict(fixed_placement.gamma), placement.pi, placement.theta
                )
            links = problem is not Problem.NODES
            if verify_placement(placement, network, batch, links=links):
                continue
            report = compute_costs(placement, network, batch, weights)
            value = report.power_cost if problem is Problem.NODES else report.total
            if best is None or value < best.objective - TOLERANCE:
                best = BruteForceResult(value, placement)
    return best


@dataclass(frozen=True)
class OracleMismatch:
    instance: int
    problem: Problem
    solver_value: float | None
    brute_value: float | None

    def __str__(self) -> str:
        return (
            f"instance {self.instance}, {self.problem.value} model: solver "
            f"{self.solver_value} vs enumeration {self.brute_value}"
        )


@dataclass
class OracleReport:
    checked: int = 0
    mismatches: list[OracleMismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict[str, Any]:
        return {
            "checked": self.checked,
            "mismatches": [str(m) for m in self.mismatches],
        }


def tiny_instance(
    rng: np.random.Generator, max_nodes: int, max_slices: int, max_vms: int
) -> tuple[PhysicalNetwork, RequestBatch]:
    """Small random scenario with tight node capacity so constraints bind."""
    node_count = int(rng.integers(1, max_nodes + 1))
    tenants = int(rng.integers(1, max_slices + 1))
    vms = int(rng.integers(1, max_vms + 1))
    network = generate_random_topology(
        node_count,
        int(rng.integers(2**32)),
        TopologyParams(compute=2500.0, max_hops=2),
    )
    batch = generate_batch(
        tenants,
        1,
        vms,
        seed=int(rng.integers(2**32)),
        params=DemandParams(max_delay=(1.0, 6.0)),
    )
    return network, batch


def _solver_value(model, solver: str) -> float | None:
    solution = solve_milp(model, None, solver)
    if solution.status is SolveStatus.INFEASIBLE:
        return None
    return solution.objective_value


def _agree(a: float | None, b: float | None) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, rel_tol=TOLERANCE, abs_tol=TOLERANCE)


def run_oracle(
    instances: int = 200,
    max_nodes: int = 2,
    max_slices: int = 2,
    max_vms: int = 2,
    seed: int = 0,
    solver: str = "internal",
    weights: CostWeights | None = None,
) -> OracleReport:
    """Compare solver optima of all three models against enumeration."""
    weights = weights or CostWeights()
    rng = np.random.default_rng(seed)
    report = OracleReport()
    for i in range(instances):
        network, batch = tiny_instance(rng, max_nodes, max_slices, max_vms)

        joint = formulate(network, batch, weights, name="jra")
        nodes = formulate(
            network, batch, weights, links=False, objective=Objective.POWER, name="dma"
        )
        checks = [(Problem.JOINT, joint, None), (Problem.NODES, nodes, None)]
        try:
            dma = run_dma(network, batch, weights, solver)
        except InfeasibleAfterAdmission:
            dma = None
        if dma is not None and dma.placement is not None:
            links = formulate(
                network,
                batch,
                weights,
                nodes=False,
                fixed_placement=dma.placement,
                name="dla",
            )
            checks.append((Problem.LINKS, links, dma.placement))

        for problem, model, fixed in checks:
            found = _solver_value(model, solver)
            brute = brute_force(network, batch, weights, problem, fixed)
            expected = None if brute is None else brute.objective
            report.checked += 1
            if not _agree(found, expected):
                mismatch = OracleMismatch(i, problem, found, expected)
                logger.warning("oracle mismatch: %s", mismatch)
                report.mismatches.append(mismatch)
    logger.info(
        "oracle: %d checks, %d mismatches", report.checked, len(report.mismatches)
    )
    return report
