"""
Disjoint resource allocation: nodes first, links second.

    AC-DMA -> DMA (power only) -> AC-DLA -> DLA (routing cost)

The node stage never looks at links. Its placement is frozen before the
link stage runs; slices rejected by AC-DLA keep their VMs where DMA put
them, but their VLs are not routed and they count as rejected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

from .admission import AdmissionOutcome, Rejection, run_ac_dla, run_ac_dma
from .errors import InfeasibleAfterAdmission, InvariantViolation
from .jra import (
    CostReport,
    CostWeights,
    JraModel,
    JraResult,
    Objective,
    Placement,
    compute_costs,
    decode_and_cost,
    decode_placement,
    formulate,
    verify_placement,
)
from .milp import TOLERANCE, Relation, SolveStatus, solve_milp
from .slices import RequestBatch
from .topology import PhysicalNetwork

logger = logging.getLogger(__name__)


def _solve_stage(model, solver: str, time_limit: float | None) -> JraResult:
    solution = solve_milp(model, time_limit, solver)
    if solution.status is SolveStatus.INFEASIBLE:
        raise InfeasibleAfterAdmission(
            f"{model.name} infeasible on {len(model.batch)} admitted slices"
        )
    if solution.assignment is None:
        return JraResult(solution)
    placement, cost = decode_and_cost(solution, model)
    return JraResult(solution, placement, cost)


def run_dma(
    network: PhysicalNetwork,
    accepted_nodes: RequestBatch,
    weights: CostWeights | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> JraResult:
    """
    Power-minimal VM packing; only xi and gamma in the placement.

    Among equal-power packings the one with the smallest sum of host node
    indices wins: a second solve keeps power at its optimum and minimizes
    sum n * xi[m, n].
    """
    model = formulate(
        network,
        accepted_nodes,
        weights,
        links=False,
        objective=Objective.POWER,
        name="dma",
    )
    result = _solve_stage(model, solver, time_limit)
    if result.placement is None or not len(accepted_nodes):
        return result
    return _lowest_index_packing(model, result, solver, time_limit)


def _lowest_index_packing(
    model: JraModel, optimal: JraResult, solver: str, time_limit: float | None
) -> JraResult:
    network, batch = model.network, model.batch
    power = optimal.cost.power_cost
    tie = formulate(
        network,
        batch,
        model.weights,
        links=False,
        objective=Objective.POWER,
        name="dma-tiebreak",
    )
    power_terms = list(tie.objective.items())
    tie.objective.clear()
    tie.add_constraint(
        power_terms,
        Relation.LE,
        power + TOLERANCE * max(1.0, abs(power)),
        "DMA power at optimum",
    )
    for (_, n), var in tie.index.xi.items():
        if n:
            tie.add_objective(var, float(n))

    solution = solve_milp(tie, time_limit, solver)
    if solution.assignment is None:
        return optimal
    placement = decode_placement(solution, tie)
    problems = verify_placement(placement, network, batch, links=False)
    if problems:
        raise InvariantViolation(problems[0].split(" ", 1)[0], problems[0])
    cost = compute_costs(placement, network, batch, model.weights)
    logger.debug(
        "DMA tie-break: hosts %s, power %.6g", placement.active_nodes, cost.power_total
    )
    return JraResult(solution, placement, cost)


def run_dla(
    network: PhysicalNetwork,
    placement: Placement,
    accepted_links: RequestBatch,
    weights: CostWeights | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> JraResult:
    """C_Total-minimal routing over a frozen xi / gamma."""
    model = formulate(
        network,
        accepted_links,
        weights,
        nodes=False,
        fixed_placement=placement,
        objective=Objective.COST,
        name="dla",
    )
    return _solve_stage(model, solver, time_limit)


@dataclass
class NodeStage:
    admission: AdmissionOutcome
    result: JraResult | None = None

    @property
    def placement(self) -> Placement | None:
        return None if self.result is None else self.result.placement

    @property
    def power_cost(self) -> float:
        if self.result is None or self.result.cost is None:
            return float("nan")
        return self.result.cost.power_cost


@dataclass
class LinkStage:
    admission: AdmissionOutcome | None = None
    result: JraResult | None = None

    @property
    def beta(self) -> float:
        if self.result is None or self.result.cost is None:
            return float("nan")
        return self.result.cost.beta


@dataclass
class DisjointResult:
    offered: int
    node_stage: NodeStage
    link_stage: LinkStage
    placement: Placement | None = None
    cost: CostReport | None = None

    @property
    def accepted(self) -> RequestBatch:
        if self.link_stage.admission is None:
            return RequestBatch()
        return self.link_stage.admission.accepted

    @property
    def rejected(self) -> list[Rejection]:
        rejected = list(self.node_stage.admission.rejected)
        if self.link_stage.admission is not None:
            rejected += self.link_stage.admission.rejected
        return rejected

    @property
    def acceptance_ratio(self) -> float:
        if not self.offered:
            return 1.0
        return len(self.accepted) / self.offered

    @property
    def combined_cost(self) -> float:
        return float("nan") if self.cost is None else self.cost.total

    @property
    def collapse_flag(self) -> bool:
        """Node stage accepted something, a completed link stage accepted nothing."""
        if self.link_stage.admission is None or self.time_limited:
            return False
        return len(self.node_stage.admission.accepted) > 0 and len(self.accepted) == 0

    @property
    def time_limited(self) -> bool:
        flags = [self.node_stage.admission.time_limited]
        if self.node_stage.result is not None:
            flags.append(self.node_stage.result.time_limited)
        if self.link_stage.admission is not None:
            flags.append(self.link_stage.admission.time_limited)
        if self.link_stage.result is not None:
            flags.append(self.link_stage.result.time_limited)
        return any(flags)

    def to_dict(self) -> dict[str, Any]:
        link_admission = self.link_stage.admission
        return {
            "method": "DRA",
            "offered": self.offered,
            "acceptance_ratio": self.acceptance_ratio,
            "collapse": self.collapse_flag,
            "time_limited": self.time_limited,
            "stages": [
                {
                    "stage": "nodes",
                    "admission": self.node_stage.admission.to_dict(),
                    "power_cost": self.node_stage.power_cost,
                },
                {
                    "stage": "links",
                    "admission": None if link_admission is None else link_admission.to_dict(),
                    "beta": self.link_stage.beta,
                },
            ],
            "placement": None if self.placement is None else self.placement.to_dict(),
            "cost": None if self.cost is None else self.cost.to_dict(),
        }


def run_dra_pipeline(
    network: PhysicalNetwork,
    batch: RequestBatch,
    weights: CostWeights | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> DisjointResult:
    weights = weights or CostWeights()
    node_admission = run_ac_dma(network, batch, solver, time_limit)
    node_stage = NodeStage(node_admission)
    result = DisjointResult(len(batch), node_stage, LinkStage())
    if node_admission.time_limited:
        return result

    node_batch = node_admission.accepted
    node_stage.result = run_dma(network, node_batch, weights, solver, time_limit)
    dma_placement = node_stage.placement
    if dma_placement is None:
        return result
    logger.info(
        "DMA placed %d slices on nodes %s", len(node_batch), dma_placement.active_nodes
    )

    frozen = dma_placement.node_part()
    link_admission = run_ac_dla(network, node_batch, frozen, solver, time_limit)
    result.link_stage.admission = link_admission
    if link_admission.time_limited:
        return result
    link_batch = link_admission.accepted
    if len(node_batch) and not len(link_batch):
        logger.info("link stage rejected all %d node-stage slices", len(node_batch))

    result.link_stage.result = run_dla(
        network, frozen, link_batch, weights, solver, time_limit
    )
    routed = result.link_stage.result.placement
    if routed is None:
        return result

    # power of every DMA-placed VM, bandwidth of the routed VLs only
    result.placement = frozen.with_routes(routed.pi, routed.theta)
    result.cost = compute_costs(result.placement, network, node_batch, weights)
    return result
