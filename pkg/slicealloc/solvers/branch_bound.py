"""
Best-bound branch-and-bound over the binary variables of a MilpModel.

Branching picks the most fractional binary (lowest id on ties). Nodes with
equal bounds are explored deepest first, and the x = 1 child is queued
before the x = 0 child, so the search is deterministic for a given model.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time

import numpy as np

from ..milp import TOLERANCE, MilpModel, MilpSolution, SolveStatus
from .simplex import LinearProgram, solve_lp

logger = logging.getLogger(__name__)


def _most_fractional(x: np.ndarray, binaries: np.ndarray) -> int | None:
    values = x[binaries]
    fraction = np.minimum(values - np.floor(values), np.ceil(values) - values)
    best = int(np.argmax(fraction))
    if fraction[best] <= TOLERANCE:
        return None
    return int(binaries[best])


def branch_and_bound(model: MilpModel, time_limit: float | None = None) -> MilpSolution:
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    lp = LinearProgram.from_model(model)
    binaries = np.array(model.binaries, dtype=int)

    incumbent: np.ndarray | None = None
    incumbent_value = np.inf
    explored = 0
    counter = itertools.count()
    heap: list = []

    def gap() -> float:
        if incumbent is None:
            return 0.0
        return 1e-9 * max(1.0, abs(incumbent_value))

    def consider(lower: np.ndarray, upper: np.ndarray, depth: int) -> SolveStatus:
        nonlocal incumbent, incumbent_value, explored
        explored += 1
        res = solve_lp(lp, lower, upper)
        if res.status is not SolveStatus.OPTIMAL:
            return res.status
        assert res.x is not None
        if res.objective >= incumbent_value - gap():
            return res.status
        branch_var = _most_fractional(res.x, binaries) if binaries.size else None
        if branch_var is None:
            x = res.x.copy()
            x[binaries] = np.round(x[binaries])
            incumbent = x
            incumbent_value = model.evaluate(x)
            logger.debug("incumbent %.10g after %d nodes", incumbent_value, explored)
        else:
            heapq.heappush(
                heap, (res.objective, -depth, next(counter), lower, upper, branch_var)
            )
        return res.status

    root_status = consider(lp.lower.copy(), lp.upper.copy(), 0)
    if root_status is SolveStatus.UNBOUNDED:
        return MilpSolution(SolveStatus.UNBOUNDED, nodes=explored)

    timed_out = False
    while heap:
        if deadline is not None and time.perf_counter() > deadline:
            timed_out = True
            break
        bound, neg_depth, _, lower, upper, var = heapq.heappop(heap)
        if bound >= incumbent_value - gap():
            continue
        for value in (1.0, 0.0):
            child_lower = lower.copy()
            child_upper = upper.copy()
            child_lower[var] = child_upper[var] = value
            consider(child_lower, child_upper, -neg_depth + 1)

    wall = time.perf_counter() - start
    logger.debug(
        "%s: %d nodes in %.3fs, best %.10g", model.name, explored, wall, incumbent_value
    )
    if timed_out:
        return MilpSolution(
            SolveStatus.TIME_LIMIT,
            incumbent,
            incumbent_value if incumbent is not None else np.nan,
            explored,
            wall,
        )
    if incumbent is None:
        return MilpSolution(SolveStatus.INFEASIBLE, nodes=explored, wall_time=wall)
    return MilpSolution(SolveStatus.OPTIMAL, incumbent, incumbent_value, explored, wall)
