"""
Two-phase dense tableau simplex.

Variables with lower == upper are substituted out before the tableau is
built; every other variable is shifted to start at zero and, when it has a
finite upper bound, gets an explicit bound row. Pivoting uses Dantzig's rule
until a run of degenerate pivots is seen, then switches to Bland's rule for
the rest of the solve so the method always terminates.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..errors import SolverError
from ..milp import MilpModel, MilpSolution, Relation, SolveStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
ZERO_TOL = 1e-12
DEGENERATE_RUN = 50
MAX_PIVOTS = 200_000


@dataclass
class LinearProgram:
    """Dense matrix form of a model, reused across branch-and-bound nodes."""

    c: np.ndarray
    A: np.ndarray
    relations: list[Relation]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_model(cls, model: MilpModel) -> LinearProgram:
        A, relations, b = model.matrix()
        lower, upper = model.bounds()
        return cls(model.cost_vector(), A, relations, b, lower, upper)


@dataclass
class LpResult:
    status: SolveStatus
    x: np.ndarray | None = None
    objective: float = np.nan
    pivots: int = 0


def _pivot(T: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[np.abs(T) < ZERO_TOL] = 0.0


def _iterate(T: np.ndarray, basis: np.ndarray, columns: int) -> tuple[str, int]:
    """
    Run simplex pivots on the tableau until optimal or unbounded.

    The last row of T holds reduced costs and -objective, the last column
    the basic values. Only the first `columns` columns may enter.
    """
    bland = False
    degenerate = 0
    for pivots in range(MAX_PIVOTS):
        reduced = T[-1, :columns]
        candidates = np.flatnonzero(reduced < -PIVOT_TOL)
        if candidates.size == 0:
            return "optimal", pivots
        if bland:
            col = candidates[0]
        else:
            col = candidates[np.argmin(reduced[candidates])]

        column = T[:-1, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            return "unbounded", pivots
        ratios = np.full(column.shape, np.inf)
        ratios[positive] = T[:-1, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL)
        row = ties[np.argmin(basis[ties])]

        if best <= PIVOT_TOL:
            degenerate += 1
            if degenerate >= DEGENERATE_RUN and not bland:
                logger.debug("degenerate run, switching to Bland's rule")
                bland = True
        else:
            degenerate = 0

        _pivot(T, row, col)
        basis[row] = col
    raise SolverError(f"simplex did not converge in {MAX_PIVOTS} pivots")


def solve_lp(
    lp: LinearProgram,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> LpResult:
    """Minimize c.x subject to the rows of `lp` and lower <= x <= upper."""
    lower = lp.lower if lower is None else lower
    upper = lp.upper if upper is None else upper
    n = lp.c.size

    free = np.flatnonzero(lower != upper)
    shifted_rhs = lp.b - lp.A @ lower
    A = lp.A[:, free]
    c = lp.c[free]
    span = (upper - lower)[free]
    bounded = np.flatnonzero(np.isfinite(span))

    rows = [A, np.eye(free.size)[bounded]]
    relations = list(lp.relations) + [Relation.LE] * bounded.size
    rhs = np.concatenate([shifted_rhs, span[bounded]])
    A = np.vstack(rows) if free.size else np.zeros((len(relations), 0))
    m = len(relations)

    scale = max(1.0, float(np.abs(rhs).max())) if m else 1.0
    feasibility_tol = 1e-6 + 1e-9 * scale

    def result(status: SolveStatus, y: np.ndarray | None = None, pivots: int = 0):
        if y is None:
            return LpResult(status, pivots=pivots)
        x = lower.copy()
        x[free] += y
        return LpResult(status, x, float(lp.c @ x), pivots)

    if free.size == 0:
        for relation, value in zip(relations, rhs):
            # every row reads 0 <relation> value
            if (
                (relation is Relation.LE and value < -feasibility_tol)
                or (relation is Relation.GE and value > feasibility_tol)
                or (relation is Relation.EQ and abs(value) > feasibility_tol)
            ):
                return result(SolveStatus.INFEASIBLE)
        return result(SolveStatus.OPTIMAL, np.zeros(0))
    if m == 0:
        if (c < 0).any():
            return result(SolveStatus.UNBOUNDED)
        return result(SolveStatus.OPTIMAL, np.zeros(free.size))

    # slack columns: +1 for <=, -1 for >=
    slack_rows = [i for i, r in enumerate(relations) if r is not Relation.EQ]
    slack = np.zeros((m, len(slack_rows)))
    for j, i in enumerate(slack_rows):
        slack[i, j] = 1.0 if relations[i] is Relation.LE else -1.0
    body = np.hstack([A, slack])
    negative = rhs < 0
    body[negative] *= -1
    rhs = np.abs(rhs)

    # rows whose slack now has +1 start with the slack in the basis
    basis = np.full(m, -1)
    for j, i in enumerate(slack_rows):
        if body[i, free.size + j] == 1.0:
            basis[i] = free.size + j
    needs_artificial = np.flatnonzero(basis < 0)
    structural = body.shape[1]
    artificial = np.zeros((m, needs_artificial.size))
    for j, i in enumerate(needs_artificial):
        artificial[i, j] = 1.0
        basis[i] = structural + j

    T = np.zeros((m + 1, structural + needs_artificial.size + 1))
    T[:m, :structural] = body
    T[:m, structural:-1] = artificial
    T[:m, -1] = rhs

    pivots = 0
    if needs_artificial.size:
        T[-1, structural:-1] = 1.0
        T[-1] -= T[needs_artificial].sum(axis=0)
        status, count = _iterate(T, basis, T.shape[1] - 1)
        pivots += count
        if -T[-1, -1] > feasibility_tol:
            return result(SolveStatus.INFEASIBLE, pivots=pivots)

        # drive artificials out of the basis, dropping redundant rows
        redundant = []
        for i in range(m):
            if basis[i] < structural:
                continue
            nonzero = np.flatnonzero(np.abs(T[i, :structural]) > PIVOT_TOL)
            if nonzero.size:
                _pivot(T, i, nonzero[0])
                basis[i] = nonzero[0]
            else:
                redundant.append(i)
        keep = [i for i in range(m) if i not in redundant]
        T = np.vstack([T[keep], T[-1:]])
        T = np.delete(T, np.s_[structural:-1], axis=1)
        basis = basis[keep]

    cost = np.concatenate([c, np.zeros(structural - free.size)])
    basic_cost = cost[basis]
    T[-1, :-1] = cost - basic_cost @ T[:-1, :-1]
    T[-1, -1] = -(basic_cost @ T[:-1, -1])

    status, count = _iterate(T, basis, structural)
    pivots += count
    if status == "unbounded":
        return result(SolveStatus.UNBOUNDED, pivots=pivots)

    y = np.zeros(structural)
    y[basis] = T[:-1, -1]
    return result(SolveStatus.OPTIMAL, y[: free.size], pivots)


def solve_relaxation(model: MilpModel) -> MilpSolution:
    """Continuous relaxation of `model`: binaries range over [0, 1]."""
    start = time.perf_counter()
    lp = LinearProgram.from_model(model)
    res = solve_lp(lp)
    logger.debug("%s relaxation: %s after %d pivots", model.name, res.status, res.pivots)
    return MilpSolution(
        status=res.status,
        assignment=res.x,
        objective_value=res.objective,
        wall_time=time.perf_counter() - start,
    )
