"""
Admission control by elasticization.

Capacity (C1), bandwidth (C6) and delay (C7) rows get nonnegative slack
variables and the total slack is minimized. While any slack is positive,
one slice is rejected and the elastic problem is solved again:

    compute > memory > storage   reject the largest SumUsed<resource> slice
    bandwidth                    reject the largest SumUsedRate slice
    delay                        reject the slice with the largest sigma_tau

Only the first overflowing category is acted on per round. Ties go to the
lowest (tenant, slice).
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import ModelError
from .jra import JraModel, Objective, Placement, formulate
from .milp import SolveStatus, solve_milp
from .slices import (
    DemandKind,
    RequestBatch,
    SliceId,
    SliceRequest,
    SliceStatus,
)
from .topology import PhysicalNetwork, ResourceKind

logger = logging.getLogger(__name__)

SLACK_TOL = 1e-6


class ElasticBase(Enum):
    JOINT = "joint"
    NODES_ONLY = "nodes"
    LINKS_ONLY = "links"

    @property
    def categories(self) -> tuple[RejectReason, ...]:
        match self:
            case ElasticBase.JOINT:
                return tuple(RejectReason)
            case ElasticBase.NODES_ONLY:
                return RejectReason.COMPUTE, RejectReason.MEMORY, RejectReason.STORAGE
            case ElasticBase.LINKS_ONLY:
                return RejectReason.BANDWIDTH, RejectReason.DELAY


class RejectReason(Enum):
    COMPUTE = "compute"
    MEMORY = "memory"
    STORAGE = "storage"
    BANDWIDTH = "bandwidth"
    DELAY = "delay"

    @property
    def demand(self) -> DemandKind | None:
        """Per-slice demand the culprit is chosen by; delay uses sigma_tau."""
        match self:
            case RejectReason.BANDWIDTH:
                return DemandKind.RATE
            case RejectReason.DELAY:
                return None
            case _:
                return DemandKind(self.value)


@dataclass(frozen=True)
class ElasticReport:
    sigma_vm: dict[tuple[int, ResourceKind], float]
    sigma_bw: dict[int, float]
    sigma_tau: dict[SliceId, float]
    status: SolveStatus = SolveStatus.OPTIMAL

    @property
    def total(self) -> float:
        return (
            sum(self.sigma_vm.values())
            + sum(self.sigma_bw.values())
            + sum(self.sigma_tau.values())
        )

    def category_total(self, reason: RejectReason) -> float:
        match reason:
            case RejectReason.BANDWIDTH:
                return sum(self.sigma_bw.values())
            case RejectReason.DELAY:
                return sum(self.sigma_tau.values())
            case _:
                kind = ResourceKind(reason.value)
                return sum(v for (_, k), v in self.sigma_vm.items() if k is kind)

    def offending(
        self, categories: Iterable[RejectReason] = tuple(RejectReason)
    ) -> RejectReason | None:
        for reason in categories:
            if self.category_total(reason) > SLACK_TOL:
                return reason
        return None

    @property
    def time_limited(self) -> bool:
        return self.status is SolveStatus.TIME_LIMIT

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "per_category": {r.value: self.category_total(r) for r in RejectReason},
            "sigma_vm": [
                {"node": n, "resource": kind.value, "value": v}
                for (n, kind), v in self.sigma_vm.items()
                if v > 0
            ],
            "sigma_bw": [
                {"link": link, "value": v} for link, v in self.sigma_bw.items() if v > 0
            ],
            "sigma_tau": [
                {"slice": list(s), "value": v} for s, v in self.sigma_tau.items() if v > 0
            ],
        }


@dataclass(frozen=True)
class Rejection:
    slice_id: SliceId
    reason: RejectReason
    round: int

    def to_dict(self) -> dict[str, Any]:
        return {"slice": list(self.slice_id), "reason": self.reason.value, "round": self.round}


@dataclass(frozen=True)
class RoundRecord:
    round: int
    slack: dict[str, float]
    total: float
    rejected: Rejection | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "total": self.total,
            "slack": self.slack,
            "rejected": None if self.rejected is None else self.rejected.to_dict(),
        }


@dataclass
class AdmissionOutcome:
    accepted: RequestBatch
    rejected: list[Rejection] = field(default_factory=list)
    rounds: int = 0
    history: list[RoundRecord] = field(default_factory=list)
    time_limited: bool = False
    rejected_batch: RequestBatch = field(default_factory=RequestBatch)

    @property
    def offered(self) -> int:
        return len(self.accepted) + len(self.rejected)

    @property
    def acceptance_ratio(self) -> float:
        if not self.offered:
            return 1.0
        return len(self.accepted) / self.offered

    @property
    def rejected_ids(self) -> list[SliceId]:
        return [r.slice_id for r in self.rejected]

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": [list(key) for key in self.accepted.keys],
            "rejected": [r.to_dict() for r in self.rejected],
            "rounds": self.rounds,
            "acceptance_ratio": self.acceptance_ratio,
            "time_limited": self.time_limited,
            "history": [h.to_dict() for h in self.history],
        }


def build_elastic_model(
    network: PhysicalNetwork,
    batch: RequestBatch,
    base: ElasticBase = ElasticBase.JOINT,
    fixed_placement: Placement | None = None,
) -> JraModel:
    if base is ElasticBase.LINKS_ONLY and fixed_placement is None:
        raise ModelError("the links-only elastic model needs a fixed placement")
    return formulate(
        network,
        batch,
        nodes=base is not ElasticBase.LINKS_ONLY,
        links=base is not ElasticBase.NODES_ONLY,
        elastic=True,
        fixed_placement=fixed_placement if base is ElasticBase.LINKS_ONLY else None,
        objective=Objective.SLACK,
        name=f"elastic-{base.value}",
    )


def solve_elastic(
    network: PhysicalNetwork,
    batch: RequestBatch,
    base: ElasticBase = ElasticBase.JOINT,
    fixed_placement: Placement | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> ElasticReport | None:
    """Minimum total slack, or None when the time limit passed with no incumbent."""
    model = build_elastic_model(network, batch, base, fixed_placement)
    solution = solve_milp(model, time_limit, solver)
    if solution.assignment is None:
        if solution.status is SolveStatus.TIME_LIMIT:
            return None
        # slack makes every elastic model feasible
        raise ModelError(f"{model.name} returned {solution.status.value}")

    def slack(variables: dict) -> dict:
        return {
            key: max(0.0, value) for key, value in solution.values(variables).items()
        }

    idx = model.index
    return ElasticReport(
        slack(idx.sigma_vm), slack(idx.sigma_bw), slack(idx.sigma_tau), solution.status
    )


def _argmax(batch: RequestBatch, score: Callable[[SliceRequest], float]) -> SliceId:
    best: SliceRequest | None = None
    for s in batch:  # ascending (t, k), so strict > keeps the lowest on ties
        if best is None or score(s) > score(best):
            best = s
    assert best is not None
    return best.key


def _culprit(batch: RequestBatch, reason: RejectReason, report: ElasticReport) -> SliceId:
    kind = reason.demand
    if kind is None:
        return _argmax(batch, lambda s: report.sigma_tau.get(s.key, 0.0))
    return _argmax(batch, lambda s: s.demand(kind))


def run_admission(
    network: PhysicalNetwork,
    batch: RequestBatch,
    base: ElasticBase,
    fixed_placement: Placement | None = None,
    solver: str = "internal",
    time_limit: float | None = None,
) -> AdmissionOutcome:
    current = batch
    outcome = AdmissionOutcome(accepted=batch)
    while len(current):
        outcome.rounds += 1
        report = solve_elastic(
            network, current, base, fixed_placement, solver, time_limit
        )
        if report is None:
            logger.warning(
                "%s admission: round %d hit the time limit without a solution",
                base.value,
                outcome.rounds,
            )
            outcome.time_limited = True
            break
        outcome.time_limited |= report.time_limited

        reason = report.offending(base.categories)
        rejection = None
        if reason is not None:
            rejection = Rejection(
                _culprit(current, reason, report), reason, outcome.rounds
            )
        outcome.history.append(
            RoundRecord(
                outcome.rounds,
                {r.value: report.category_total(r) for r in base.categories},
                report.total,
                rejection,
            )
        )
        if rejection is None:
            break
        logger.info(
            "%s admission round %d: slack %.6g, rejecting slice %s for %s",
            base.value,
            outcome.rounds,
            report.total,
            rejection.slice_id,
            reason.value,
        )
        outcome.rejected.append(rejection)
        current = current.without([rejection.slice_id])

    outcome.accepted = current.with_status(SliceStatus.ACCEPTED)
    outcome.rejected_batch = batch.only(outcome.rejected_ids).with_status(
        SliceStatus.REJECTED
    )
    logger.info(
        "%s admission: %d of %d accepted after %d rounds",
        base.value,
        len(outcome.accepted),
        len(batch),
        outcome.rounds,
    )
    return outcome


def run_ac_jra(
    network: PhysicalNetwork,
    batch: RequestBatch,
    solver: str = "internal",
    time_limit: float | None = None,
) -> AdmissionOutcome:
    return run_admission(network, batch, ElasticBase.JOINT, None, solver, time_limit)


def run_ac_dma(
    network: PhysicalNetwork,
    batch: RequestBatch,
    solver: str = "internal",
    time_limit: float | None = None,
) -> AdmissionOutcome:
    return run_admission(
        network, batch, ElasticBase.NODES_ONLY, None, solver, time_limit
    )


def run_ac_dla(
    network: PhysicalNetwork,
    batch: RequestBatch,
    fixed_placement: Placement,
    solver: str = "internal",
    time_limit: float | None = None,
) -> AdmissionOutcome:
    return run_admission(
        network, batch, ElasticBase.LINKS_ONLY, fixed_placement, solver, time_limit
    )
