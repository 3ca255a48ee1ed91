"""
External solver adapter: scipy's HiGHS MILP interface.

Same contract as the internal branch-and-bound: binaries come back rounded
and the objective is re-evaluated on the rounded assignment.
"""

from __future__ import annotations

import logging
import time

import numpy as np

from ..errors import SolverError, SolverUnavailable
from ..milp import MilpModel, MilpSolution, Relation, SolveStatus

logger = logging.getLogger(__name__)


def check_available():
    try:
        from scipy.optimize import milp  # noqa: F401
    except ImportError as exc:
        raise SolverUnavailable(f"scipy HiGHS adapter unavailable: {exc}") from exc


def _constraint_arrays(model: MilpModel):
    from scipy.sparse import csr_array

    rows, cols, data = [], [], []
    lb = np.empty(len(model.constraints))
    ub = np.empty(len(model.constraints))
    for i, c in enumerate(model.constraints):
        for var, coef in c.terms:
            rows.append(i)
            cols.append(var)
            data.append(coef)
        match c.relation:
            case Relation.LE:
                lb[i], ub[i] = -np.inf, c.rhs
            case Relation.GE:
                lb[i], ub[i] = c.rhs, np.inf
            case Relation.EQ:
                lb[i], ub[i] = c.rhs, c.rhs
    shape = (len(model.constraints), len(model.variables))
    return csr_array((data, (rows, cols)), shape=shape), lb, ub


def solve_external(model: MilpModel, time_limit: float | None = None) -> MilpSolution:
    check_available()
    from scipy.optimize import Bounds, LinearConstraint, milp

    start = time.perf_counter()
    lower, upper = model.bounds()
    integrality = np.array([1 if v.is_binary else 0 for v in model.variables])
    constraints = []
    if model.constraints:
        A, lb, ub = _constraint_arrays(model)
        constraints.append(LinearConstraint(A, lb, ub))
    options = {"mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)

    if not model.variables:
        return MilpSolution(SolveStatus.OPTIMAL, np.zeros(0), 0.0)

    res = milp(
        model.cost_vector(),
        integrality=integrality,
        bounds=Bounds(lower, upper),
        constraints=constraints,
        options=options,
    )
    wall = time.perf_counter() - start
    logger.debug("%s: HiGHS status %d (%s) in %.3fs", model.name, res.status, res.message, wall)

    match res.status:
        case 0:
            status = SolveStatus.OPTIMAL
        case 1:
            status = SolveStatus.TIME_LIMIT
        case 2:
            return MilpSolution(SolveStatus.INFEASIBLE, wall_time=wall)
        case 3:
            return MilpSolution(SolveStatus.UNBOUNDED, wall_time=wall)
        case _:
            raise SolverError(f"HiGHS failed on {model.name}: {res.message}")

    if res.x is None:
        return MilpSolution(status, wall_time=wall)
    x = np.asarray(res.x, dtype=float)
    binaries = integrality.astype(bool)
    x[binaries] = np.round(x[binaries])
    return MilpSolution(status, x, model.evaluate(x), wall_time=wall)
