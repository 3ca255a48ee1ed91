import pytest
from test_branch_bound import knapsack, random_binary_model

from slicealloc.milp import MilpModel, Relation, SolveStatus, VarKind, solve_milp
from slicealloc.solvers.branch_bound import branch_and_bound

pytest.importorskip("scipy.optimize")


def test_knapsack():
    solution = solve_milp(knapsack(), solver="highs")
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective_value == pytest.approx(-9)
    assert solution.assignment.tolist() == [1, 1, 0]


def test_infeasible():
    model = MilpModel("infeasible")
    x = model.add_variable("x", VarKind.CONTINUOUS)
    model.add_constraint([(x, 1)], Relation.LE, 1, "low")
    model.add_constraint([(x, 1)], Relation.GE, 2, "high")
    assert solve_milp(model, solver="highs").status is SolveStatus.INFEASIBLE


def test_empty_model():
    solution = solve_milp(MilpModel("empty"), solver="highs")
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective_value == 0


@pytest.mark.parametrize("seed", range(10))
def test_agrees_with_internal(seed):
    model = random_binary_model(seed, size=8, rows=4)
    internal = branch_and_bound(model)
    external = solve_milp(model, solver="highs")
    assert external.status is internal.status
    if internal.status is SolveStatus.OPTIMAL:
        assert external.objective_value == pytest.approx(internal.objective_value, abs=1e-6)
