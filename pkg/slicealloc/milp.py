"""
Mixed-binary linear programs: model representation and solver dispatch.

Models are minimization problems over binary and nonnegative continuous
variables. Constraint tags start with the formulation family (C1 .. C7,
C1-a, C5-b, ...) followed by free text, so models can be inspected per
family and violations can be reported by name.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ModelError, SolverUnavailable

logger = logging.getLogger(__name__)

TOLERANCE = 1e-6


class VarKind(Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Relation(Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class Variable:
    id: int
    kind: VarKind
    name: str
    lower: float = 0.0
    upper: float = np.inf

    @property
    def is_binary(self) -> bool:
        return self.kind is VarKind.BINARY

    @property
    def is_fixed(self) -> bool:
        return self.lower == self.upper


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[int, float], ...]
    relation: Relation
    rhs: float
    tag: str

    @property
    def family(self) -> str:
        return self.tag.split(" ", 1)[0]

    def activity(self, values: np.ndarray) -> float:
        return sum(coef * values[var] for var, coef in self.terms)

    def violation(self, values: np.ndarray) -> float:
        lhs = self.activity(values)
        match self.relation:
            case Relation.LE:
                return max(0.0, lhs - self.rhs)
            case Relation.GE:
                return max(0.0, self.rhs - lhs)
            case Relation.EQ:
                return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)

    def add_variable(
        self,
        name: str,
        kind: VarKind = VarKind.BINARY,
        lower: float = 0.0,
        upper: float | None = None,
    ) -> int:
        if upper is None:
            upper = 1.0 if kind is VarKind.BINARY else np.inf
        if lower < 0 or lower > upper:
            raise ModelError(f"{name}: bad bounds [{lower}, {upper}]")
        if kind is VarKind.BINARY and (lower not in (0, 1) or upper not in (0, 1)):
            raise ModelError(f"{name}: binary bounds must be 0 or 1")
        var = Variable(len(self.variables), kind, name, float(lower), float(upper))
        self.variables.append(var)
        return var.id

    def fix_variable(self, name: str, value: float) -> int:
        return self.add_variable(name, VarKind.BINARY, value, value)

    def add_constraint(
        self,
        terms: Iterable[tuple[int, float]],
        relation: Relation,
        rhs: float,
        tag: str,
    ) -> LinearConstraint:
        merged: dict[int, float] = {}
        for var, coef in terms:
            if not 0 <= var < len(self.variables):
                raise ModelError(f"{tag}: unknown variable {var}")
            merged[var] = merged.get(var, 0.0) + float(coef)
        constraint = LinearConstraint(
            tuple(merged.items()), relation, float(rhs), tag
        )
        self.constraints.append(constraint)
        return constraint

    def add_objective(self, var: int, coef: float):
        if not 0 <= var < len(self.variables):
            raise ModelError(f"objective: unknown variable {var}")
        self.objective[var] = self.objective.get(var, 0.0) + float(coef)

    @property
    def binaries(self) -> list[int]:
        return [v.id for v in self.variables if v.is_binary]

    def family(self, family: str) -> list[LinearConstraint]:
        return [c for c in self.constraints if c.family == family]

    def family_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.constraints:
            counts[c.family] = counts.get(c.family, 0) + 1
        return counts

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(len(self.variables))
        for var, coef in self.objective.items():
            c[var] = coef
        return c

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lower = np.array([v.lower for v in self.variables], dtype=float)
        upper = np.array([v.upper for v in self.variables], dtype=float)
        return lower, upper

    def matrix(self) -> tuple[np.ndarray, list[Relation], np.ndarray]:
        A = np.zeros((len(self.constraints), len(self.variables)))
        for row, constraint in enumerate(self.constraints):
            for var, coef in constraint.terms:
                A[row, var] = coef
        relations = [c.relation for c in self.constraints]
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        return A, relations, rhs

    def evaluate(self, values: np.ndarray) -> float:
        return float(sum(coef * values[var] for var, coef in self.objective.items()))

    def violations(
        self, values: np.ndarray, tol: float = TOLERANCE
    ) -> list[LinearConstraint]:
        """Constraints broken by more than `tol` (scaled by the rhs size)."""
        broken = []
        for c in self.constraints:
            if c.violation(values) > tol * max(1.0, abs(c.rhs)):
                broken.append(c)
        for v in self.variables:
            x = values[v.id]
            if x < v.lower - tol or x > v.upper + tol:
                broken.append(
                    LinearConstraint(((v.id, 1.0),), Relation.GE, v.lower, f"bound {v.name}")
                )
            elif v.is_binary and min(abs(x), abs(x - 1)) > tol:
                broken.append(
                    LinearConstraint(((v.id, 1.0),), Relation.EQ, round(x), f"integrality {v.name}")
                )
        return broken

    def dump_lp(self) -> str:
        """LP-style text listing for debugging."""
        names = [v.name for v in self.variables]

        def expr(terms: Iterable[tuple[int, float]]) -> str:
            parts = [f"{coef:+.10g} {names[var]}" for var, coef in terms]
            return " ".join(parts) if parts else "0"

        lines = [f"\\ {self.name}", "minimize", f"  obj: {expr(self.objective.items())}"]
        lines.append("subject to")
        for c in self.constraints:
            lines.append(f"  {c.tag}: {expr(c.terms)} {c.relation.value} {c.rhs:.10g}")
        lines.append("bounds")
        for v in self.variables:
            if v.is_binary and not v.is_fixed:
                continue
            lines.append(f"  {v.lower:.10g} <= {v.name} <= {v.upper:.10g}")
        binaries = [v.name for v in self.variables if v.is_binary and not v.is_fixed]
        if binaries:
            lines.append("binary")
            lines.extend(f"  {name}" for name in binaries)
        lines.append("end")
        return "\n".join(lines) + "\n"


@dataclass
class MilpSolution:
    status: SolveStatus
    assignment: np.ndarray | None = None
    objective_value: float = np.nan
    nodes: int = 0
    wall_time: float = 0.0

    @property
    def has_assignment(self) -> bool:
        return self.assignment is not None

    def value(self, var: int) -> float:
        assert self.assignment is not None
        return float(self.assignment[var])

    def values(self, variables: Mapping[object, int]) -> dict[object, float]:
        assert self.assignment is not None
        return {key: float(self.assignment[var]) for key, var in variables.items()}


SOLVER_NAMES = ("internal", "highs")


def check_solver(solver: str):
    """Fail before any solve when the back end can't be used."""
    match solver:
        case "internal":
            return
        case "highs":
            from .solvers import highs

            highs.check_available()
        case _:
            raise SolverUnavailable(
                f"unknown solver {solver!r}, choose one of {', '.join(SOLVER_NAMES)}"
            )


def solve_lp_relaxation(model: MilpModel) -> MilpSolution:
    from .solvers.simplex import solve_relaxation

    return solve_relaxation(model)


def solve_milp(
    model: MilpModel, time_limit: float | None = None, solver: str = "internal"
) -> MilpSolution:
    check_solver(solver)
    logger.debug(
        "solving %s with %s: %d variables, %s",
        model.name,
        solver,
        len(model.variables),
        model.family_counts(),
    )
    match solver:
        case "highs":
            from .solvers.highs import solve_external

            return solve_external(model, time_limit)
        case _:
            from .solvers.branch_bound import branch_and_bound

            return branch_and_bound(model, time_limit)
