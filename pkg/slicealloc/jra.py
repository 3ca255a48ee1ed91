"""
Joint resource allocation: VM placement and VL routing in one MILP.

The same builder produces every problem in the package. Node blocks (C1-C3)
and link blocks (C4-C7) can be switched on separately, C1/C6/C7 can be
elasticized, and a frozen placement can be supplied for the link-only
problems. Objectives:

    COST   zeta * beta + upsilon * sum_n P_n        (joint and link-only placement)
    POWER  upsilon * sum_n P_n                      (node-only placement)
    SLACK  sum of elastic variables                 (admission control)

The bilinear pinning constraint C5 is linearized with theta = xi * xi':

    C5-a  sum_b pi[e, n, n', b] = theta[e, n, n']
    C5-b  theta <= xi[m, n] + 1 - xi[m', n']
    C5-c  xi[m, n] <= theta + 1 - xi[m', n']
    C5-d  theta <= xi[m', n']

theta and the path sums exist for n == n' as well; a VL whose VMs share a
node is carried by that node's intra path.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np

from .errors import (
    InfeasibleAfterAdmission,
    InvariantViolation,
    ModelError,
    SolverError,
)
from .milp import (
    TOLERANCE,
    MilpModel,
    MilpSolution,
    Relation,
    SolveStatus,
    VarKind,
    solve_milp,
)
from .slices import RequestBatch, SliceId, VlKey, VmKey
from .topology import CloudNode, PathKey, PhysicalNetwork, ResourceKind

logger = logging.getLogger(__name__)

ThetaKey = tuple[VmKey, VmKey, int, int]


class Objective(Enum):
    COST = "cost"
    POWER = "power"
    SLACK = "slack"


@dataclass(frozen=True)
class CostWeights:
    zeta: float = 9e-5  # cost per bandwidth-cost unit
    upsilon: float = 1.0  # cost per watt

    def __post_init__(self):
        if self.zeta < 0 or self.upsilon < 0:
            raise ValueError("cost weights must be >= 0")


@dataclass
class VariableIndex:
    xi: dict[tuple[VmKey, int], int] = field(default_factory=dict)
    gamma: dict[int, int] = field(default_factory=dict)
    pi: dict[tuple[VlKey, PathKey], int] = field(default_factory=dict)
    theta: dict[tuple[VlKey, int, int], int] = field(default_factory=dict)
    sigma_vm: dict[tuple[int, ResourceKind], int] = field(default_factory=dict)
    sigma_bw: dict[int, int] = field(default_factory=dict)
    sigma_tau: dict[SliceId, int] = field(default_factory=dict)


@dataclass
class JraModel(MilpModel):
    network: PhysicalNetwork | None = None
    batch: RequestBatch = field(default_factory=RequestBatch)
    weights: CostWeights = field(default_factory=CostWeights)
    objective_kind: Objective = Objective.COST
    nodes: bool = True
    links: bool = True
    elastic: bool = False
    index: VariableIndex = field(default_factory=VariableIndex)


@dataclass(frozen=True)
class Placement:
    xi: Mapping[tuple[VmKey, int], int]
    gamma: Mapping[int, int]
    pi: Mapping[tuple[VlKey, PathKey], int] = field(default_factory=dict)
    theta: Mapping[ThetaKey, int] = field(default_factory=dict)

    @cached_property
    def hosts(self) -> dict[VmKey, int]:
        return {vm: n for (vm, n), value in sorted(self.xi.items()) if value}

    @cached_property
    def routes(self) -> dict[VlKey, PathKey]:
        return {vl: path for (vl, path), value in sorted(self.pi.items()) if value}

    def host(self, vm: VmKey) -> int | None:
        return self.hosts.get(vm)

    def route(self, vl: VlKey) -> PathKey | None:
        return self.routes.get(vl)

    @property
    def active_nodes(self) -> list[int]:
        return sorted(n for n, on in self.gamma.items() if on)

    def node_part(self) -> Placement:
        """xi and gamma only, as handed from the node stage to the link stage."""
        return Placement(dict(self.xi), dict(self.gamma))

    def with_routes(
        self,
        pi: Mapping[tuple[VlKey, PathKey], int],
        theta: Mapping[ThetaKey, int] | None = None,
    ) -> Placement:
        return Placement(dict(self.xi), dict(self.gamma), dict(pi), dict(theta or {}))

    @classmethod
    def build(
        cls,
        network: PhysicalNetwork,
        batch: RequestBatch,
        hosts: Mapping[VmKey, int],
        routes: Mapping[VlKey, PathKey] | None = None,
    ) -> Placement:
        """
        Complete placement from VM hosts and VL routes. gamma marks exactly
        the hosting nodes; theta is the product of the hosts.
        """
        xi = {
            (vm.key, n): int(hosts[vm.key] == n)
            for vm in batch.vms()
            for n in network.node_ids
        }
        used = set(hosts[vm.key] for vm in batch.vms())
        gamma = {n: int(n in used) for n in network.node_ids}
        pi: dict[tuple[VlKey, PathKey], int] = {}
        theta: dict[ThetaKey, int] = {}
        if routes is not None:
            for vl in batch.vls():
                a, b = vl.vm_keys
                for path in network.all_paths():
                    pi[(vl.key, path.key)] = int(routes[vl.key] == path.key)
                for n in network.node_ids:
                    for n2 in network.node_ids:
                        theta[(a, b, n, n2)] = int(hosts[a] == n and hosts[b] == n2)
        return cls(xi, gamma, pi, theta)

    def to_dict(self) -> dict[str, Any]:
        return {
            "hosts": [
                {"vm": list(vm), "node": n} for vm, n in self.hosts.items()
            ],
            "nodes_on": self.active_nodes,
            "routes": [
                {"vl": list(vl), "path": list(path)} for vl, path in self.routes.items()
            ],
        }


@dataclass(frozen=True)
class CostReport:
    total: float
    beta: float
    power: dict[int, float]
    utilization: dict[int, float]
    weights: CostWeights

    @property
    def power_total(self) -> float:
        return sum(self.power.values())

    @property
    def power_cost(self) -> float:
        return self.weights.upsilon * self.power_total

    @property
    def bandwidth_cost(self) -> float:
        return self.weights.zeta * self.beta

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "beta": self.beta,
            "power_w": self.power_total,
            "power_per_node_w": {str(n): p for n, p in self.power.items()},
            "utilization": {str(n): u for n, u in self.utilization.items()},
            "zeta": self.weights.zeta,
            "upsilon": self.weights.upsilon,
        }


def node_power(node: CloudNode, utilization: float, on: int) -> float:
    """P_n = (P_max - P_idle) * U + gamma * P_idle"""
    if on not in (0, 1):
        raise ValueError(f"node {node.id}: on must be 0 or 1, got {on}")
    if not -TOLERANCE <= utilization <= 1 + TOLERANCE:
        raise ValueError(f"node {node.id}: utilization {utilization} outside [0, 1]")
    if not on and utilization > TOLERANCE:
        raise ValueError(f"node {node.id} is off but utilized at {utilization}")
    return (node.power_max - node.power_idle) * utilization + on * node.power_idle


def bandwidth_cost(
    placement: Placement, network: PhysicalNetwork, batch: RequestBatch
) -> float:
    """beta: sum over routed VLs of rate times the psi of every link on the path."""
    rates = {vl.key: vl.rate for vl in batch.vls()}
    return sum(
        network.path(path).unit_cost * rates[vl]
        for vl, path in placement.routes.items()
        if vl in rates
    )


def compute_costs(
    placement: Placement,
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights,
) -> CostReport:
    """C_Total evaluated from a placement, without any solver values."""
    load = {n: 0.0 for n in network.node_ids}
    for vm in batch.vms():
        n = placement.host(vm.key)
        if n is not None:
            load[n] += vm.demand.compute
    utilization = {
        n: load[n] / network.node(n).capacity.compute for n in network.node_ids
    }
    power = {
        n: node_power(network.node(n), utilization[n], int(placement.gamma.get(n, 0)))
        for n in network.node_ids
    }
    beta = bandwidth_cost(placement, network, batch)
    total = weights.zeta * beta + weights.upsilon * sum(power.values())
    return CostReport(total, beta, power, utilization, weights)


def verify_placement(
    placement: Placement,
    network: PhysicalNetwork,
    batch: RequestBatch,
    links: bool = True,
) -> list[str]:
    """
    Messages for every broken constraint, each starting with its family tag.
    """
    problems = []
    for vm in batch.vms():
        count = sum(placement.xi.get((vm.key, n), 0) for n in network.node_ids)
        if count != 1:
            problems.append(f"C2 vm {vm.key} placed on {count} nodes")
        for n in network.node_ids:
            if placement.xi.get((vm.key, n), 0) > placement.gamma.get(n, 0):
                problems.append(f"C3 vm {vm.key} on node {n} which is off")

    for n in network.node_ids:
        capacity = network.node(n).capacity
        for kind in ResourceKind:
            used = sum(
                vm.demand[kind] for vm in batch.vms() if placement.host(vm.key) == n
            )
            if used > capacity[kind] + TOLERANCE * max(1.0, capacity[kind]):
                problems.append(
                    f"C1 node {n} {kind.value}: {used:g} > {capacity[kind]:g}"
                )

    if not links:
        return problems

    link_load = {link.id: 0.0 for link in network.links}
    for vl in batch.vls():
        chosen = [
            path
            for path in network.all_paths()
            if placement.pi.get((vl.key, path.key), 0)
        ]
        if len(chosen) != 1:
            problems.append(f"C4 vl {vl.key} routed over {len(chosen)} paths")
            continue
        path = chosen[0]
        a, b = vl.vm_keys
        if (path.source, path.target) != (placement.host(a), placement.host(b)):
            problems.append(
                f"C5 vl {vl.key} path {path.key} does not join hosts "
                f"{placement.host(a)} and {placement.host(b)}"
            )
        for n in network.node_ids:
            for n2 in network.node_ids:
                key = (a, b, n, n2)
                if key not in placement.theta:
                    continue
                product = placement.xi.get((a, n), 0) * placement.xi.get((b, n2), 0)
                if placement.theta[key] != product:
                    problems.append(f"C5 theta {key} = {placement.theta[key]} != {product}")
        if path.delay > vl.max_delay + TOLERANCE:
            problems.append(
                f"C7 vl {vl.key} delay {path.delay:g} > {vl.max_delay:g}"
            )
        for link in path.links:
            link_load[link.id] += vl.rate

    for link in network.links:
        if link_load[link.id] > link.bandwidth * (1 + TOLERANCE):
            problems.append(
                f"C6 link {link.id}: {link_load[link.id]:g} > {link.bandwidth:g}"
            )
    return problems


def formulate(
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights | None = None,
    *,
    nodes: bool = True,
    links: bool = True,
    elastic: bool = False,
    fixed_placement: Placement | None = None,
    objective: Objective = Objective.COST,
    name: str = "jra",
) -> JraModel:
    weights = weights or CostWeights()
    model = JraModel(
        name=name,
        network=network,
        batch=batch,
        weights=weights,
        objective_kind=objective,
        nodes=nodes,
        links=links,
        elastic=elastic,
    )
    idx = model.index
    node_ids = list(network.node_ids)

    # C9 / C8
    for vm in batch.vms():
        for n in node_ids:
            label = f"xi[{vm.key}][{n}]"
            if fixed_placement is None:
                idx.xi[(vm.key, n)] = model.add_variable(label)
            else:
                if (vm.key, n) not in fixed_placement.xi:
                    raise ModelError(f"fixed placement has no value for {label}")
                value = fixed_placement.xi[(vm.key, n)]
                idx.xi[(vm.key, n)] = model.fix_variable(label, value)
    for n in node_ids:
        label = f"gamma[{n}]"
        if fixed_placement is None:
            idx.gamma[n] = model.add_variable(label)
        else:
            idx.gamma[n] = model.fix_variable(label, fixed_placement.gamma.get(n, 0))

    if nodes:
        _add_node_blocks(model, network, batch, elastic)
    if links and any(True for _ in batch.vls()):
        _add_link_blocks(model, network, batch, elastic)

    match objective:
        case Objective.COST | Objective.POWER:
            _add_power_objective(model, network, batch, weights)
            if objective is Objective.COST:
                rates = {vl.key: vl.rate for vl in batch.vls()}
                for (vl_key, path_key), var in idx.pi.items():
                    rate = rates[vl_key]
                    unit_cost = network.path(path_key).unit_cost
                    model.add_objective(var, weights.zeta * unit_cost * rate)
        case Objective.SLACK:
            for group in (idx.sigma_vm, idx.sigma_bw, idx.sigma_tau):
                for var in group.values():
                    model.add_objective(var, 1.0)

    logger.debug(
        "built %s: %d variables, rows %s",
        name,
        len(model.variables),
        model.family_counts(),
    )
    return model


def _add_node_blocks(
    model: JraModel, network: PhysicalNetwork, batch: RequestBatch, elastic: bool
):
    idx = model.index
    c1 = "C1-a" if elastic else "C1"
    for n in network.node_ids:
        capacity = network.node(n).capacity
        for kind in ResourceKind:
            terms = [(idx.xi[(vm.key, n)], vm.demand[kind]) for vm in batch.vms()]
            if elastic:
                sigma = model.add_variable(
                    f"sigma_vm[{n}][{kind.value}]", VarKind.CONTINUOUS
                )
                idx.sigma_vm[(n, kind)] = sigma
                terms.append((sigma, -1.0))
            model.add_constraint(
                terms, Relation.LE, capacity[kind], f"{c1} node {n} {kind.value}"
            )

    for vm in batch.vms():
        model.add_constraint(
            [(idx.xi[(vm.key, n)], 1.0) for n in network.node_ids],
            Relation.EQ,
            1.0,
            f"C2 vm {vm.key}",
        )
    for n in network.node_ids:
        for vm in batch.vms():
            model.add_constraint(
                [(idx.xi[(vm.key, n)], 1.0), (idx.gamma[n], -1.0)],
                Relation.LE,
                0.0,
                f"C3 node {n} vm {vm.key}",
            )


def _add_link_blocks(
    model: JraModel, network: PhysicalNetwork, batch: RequestBatch, elastic: bool
):
    idx = model.index
    node_ids = list(network.node_ids)
    link_terms: dict[int, list[tuple[int, float]]] = {
        link.id: [] for link in network.links
    }

    for s in batch:
        if elastic and s.vls:
            idx.sigma_tau[s.key] = model.add_variable(
                f"sigma_tau[{s.key}]", VarKind.CONTINUOUS
            )

    for vl in batch.vls():
        a, b = vl.vm_keys
        delay_terms = []
        for n in node_ids:
            for n2 in node_ids:
                path_vars = []
                for path in network.paths_between(n, n2):
                    var = model.add_variable(f"pi[{vl.key}][{path.key}]")
                    idx.pi[(vl.key, path.key)] = var
                    path_vars.append(var)
                    delay_terms.append((var, path.delay))
                    for link in path.links:
                        link_terms[link.id].append((var, vl.rate))
                theta = model.add_variable(f"theta[{vl.key}][{n},{n2}]")
                idx.theta[(vl.key, n, n2)] = theta

                xi_a = idx.xi[(a, n)]
                xi_b = idx.xi[(b, n2)]
                pair = f"vl {vl.key} nodes {n},{n2}"
                model.add_constraint(
                    [(var, 1.0) for var in path_vars] + [(theta, -1.0)],
                    Relation.EQ,
                    0.0,
                    f"C5-a {pair}",
                )
                model.add_constraint(
                    [(theta, 1.0), (xi_a, -1.0), (xi_b, 1.0)],
                    Relation.LE,
                    1.0,
                    f"C5-b {pair}",
                )
                model.add_constraint(
                    [(xi_a, 1.0), (theta, -1.0), (xi_b, 1.0)],
                    Relation.LE,
                    1.0,
                    f"C5-c {pair}",
                )
                model.add_constraint(
                    [(theta, 1.0), (xi_b, -1.0)], Relation.LE, 0.0, f"C5-d {pair}"
                )

        model.add_constraint(
            [(idx.pi[(vl.key, path.key)], 1.0) for path in network.all_paths()],
            Relation.EQ,
            1.0,
            f"C4 vl {vl.key}",
        )
        c7 = "C7"
        if elastic:
            c7 = "C7-a"
            delay_terms.append((idx.sigma_tau[(vl.tenant, vl.slice)], -1.0))
        model.add_constraint(delay_terms, Relation.LE, vl.max_delay, f"{c7} vl {vl.key}")

    c6 = "C6-a" if elastic else "C6"
    for link in network.links:
        terms = link_terms[link.id]
        if not terms:
            continue
        if elastic:
            sigma = model.add_variable(f"sigma_bw[{link.id}]", VarKind.CONTINUOUS)
            idx.sigma_bw[link.id] = sigma
            terms = terms + [(sigma, -1.0)]
        model.add_constraint(terms, Relation.LE, link.bandwidth, f"{c6} link {link.id}")


def _add_power_objective(
    model: JraModel,
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights,
):
    """upsilon * sum_n ((P_max - P_idle) * U_n + gamma_n * P_idle), U_n linear in xi"""
    idx = model.index
    for n in network.node_ids:
        node = network.node(n)
        slope = (node.power_max - node.power_idle) / node.capacity.compute
        for vm in batch.vms():
            model.add_objective(
                idx.xi[(vm.key, n)], weights.upsilon * slope * vm.demand.compute
            )
        model.add_objective(idx.gamma[n], weights.upsilon * node.power_idle)


def build_jra_model(
    network: PhysicalNetwork,
    accepted: RequestBatch,
    weights: CostWeights | None = None,
) -> JraModel:
    return formulate(network, accepted, weights, name="jra")


def decode_placement(solution: MilpSolution, model: JraModel) -> Placement:
    if solution.assignment is None:
        raise SolverError(f"{model.name}: nothing to decode ({solution.status.value})")
    x = solution.assignment
    for var in model.variables:
        if var.is_binary and min(abs(x[var.id]), abs(x[var.id] - 1)) > TOLERANCE:
            raise InvariantViolation(
                "C8-C10", f"{var.name} = {x[var.id]:g} is not binary"
            )

    def bit(var: int) -> int:
        return int(round(x[var]))

    idx = model.index
    ends = {vl.key: vl.vm_keys for vl in model.batch.vls()}
    theta = {}
    for (vl_key, n, n2), var in idx.theta.items():
        a, b = ends[vl_key]
        theta[(a, b, n, n2)] = bit(var)
    return Placement(
        xi={key: bit(var) for key, var in idx.xi.items()},
        gamma={n: bit(var) for n, var in idx.gamma.items()},
        pi={key: bit(var) for key, var in idx.pi.items()},
        theta=theta,
    )


def decode_and_cost(
    solution: MilpSolution, model: JraModel
) -> tuple[Placement, CostReport]:
    """
    Decode a solved hard model, re-verify every constraint from the raw
    values and recompute the objective independently of the solver.
    """
    if model.elastic or model.objective_kind is Objective.SLACK:
        raise ModelError(f"{model.name} is an elastic model, decode its slacks instead")
    assert model.network is not None
    placement = decode_placement(solution, model)
    problems = verify_placement(
        placement, model.network, model.batch, links=model.links
    )
    if problems:
        raise InvariantViolation(problems[0].split(" ", 1)[0], problems[0])

    report = compute_costs(placement, model.network, model.batch, model.weights)
    expected = report.total
    if model.objective_kind is Objective.POWER:
        expected = report.power_cost
    if not math.isclose(
        expected, solution.objective_value, rel_tol=TOLERANCE, abs_tol=TOLERANCE
    ):
        raise InvariantViolation(
            "C_Total",
            f"recomputed {expected:.10g} but solver reports "
            f"{solution.objective_value:.10g}",
        )
    return placement, report


@dataclass
class JraResult:
    solution: MilpSolution
    placement: Placement | None = None
    cost: CostReport | None = None

    @property
    def time_limited(self) -> bool:
        return self.solution.status is SolveStatus.TIME_LIMIT


def solve_jra(
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> JraResult:
    model = build_jra_model(network, batch, weights)
    solution = solve_milp(model, time_limit, solver)
    if solution.status is SolveStatus.INFEASIBLE:
        raise InfeasibleAfterAdmission(
            f"joint model infeasible on {len(batch)} admitted slices"
        )
    if solution.assignment is None:
        return JraResult(solution)
    placement, cost = decode_and_cost(solution, model)
    return JraResult(solution, placement, cost)


def placement_array(placement: Placement, model: JraModel) -> np.ndarray:
    """Assignment vector of `model` that encodes `placement`; missing keys are 0."""
    x = np.zeros(len(model.variables))
    idx = model.index
    for key, var in idx.xi.items():
        x[var] = placement.xi.get(key, 0)
    for n, var in idx.gamma.items():
        x[var] = placement.gamma.get(n, 0)
    for key, var in idx.pi.items():
        x[var] = placement.pi.get(key, 0)
    ends = {vl.key: vl.vm_keys for vl in model.batch.vls()}
    for (vl_key, n, n2), var in idx.theta.items():
        a, b = ends[vl_key]
        x[var] = placement.theta.get((a, b, n, n2), 0)
    return x
