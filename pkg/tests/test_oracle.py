import pytest
from conftest import make_batch, make_slice
from test_branch_bound import knapsack

from slicealloc.errors import ModelError
from slicealloc.jra import Placement, solve_jra
from slicealloc.milp import MilpModel, Relation, SolveStatus, VarKind
from slicealloc.oracle import Problem, brute_force, enumerate_binary, run_oracle

ZETA = 9e-5


def test_enumerate_knapsack():
    solution = enumerate_binary(knapsack())
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective_value == pytest.approx(-9)
    assert solution.assignment.tolist() == [1, 1, 0]
    assert solution.nodes == 8


def test_enumerate_across_chunks():
    model = MilpModel("wide-cover")
    xs = [model.add_variable(f"x{i}") for i in range(16)]
    # only the upper half of the counter is feasible
    model.add_constraint([(xs[-1], 1)], Relation.GE, 1, "last")
    model.add_constraint([(x, 1) for x in xs], Relation.LE, 15, "cap")
    for i, x in enumerate(xs):
        model.add_objective(x, -1 - i / 100)
    solution = enumerate_binary(model)
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.nodes == 1 << 16
    assert solution.assignment.tolist() == [0] + [1] * 15
    assert solution.objective_value == pytest.approx(-15 - sum(range(1, 16)) / 100)


def test_enumerate_needs_binaries():
    model = MilpModel("mixed")
    model.add_variable("x", VarKind.CONTINUOUS)
    with pytest.raises(ModelError):
        enumerate_binary(model)


def test_enumerate_refuses_large_models():
    model = MilpModel("wide")
    for i in range(30):
        model.add_variable(f"x{i}")
    with pytest.raises(ModelError, match="too many"):
        enumerate_binary(model)


def test_joint_optimum(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    best = brute_force(pair_network, batch)
    assert best.objective == pytest.approx(100 * 2 / 7 + 100 + ZETA * 1e4)
    assert best.objective == pytest.approx(solve_jra(pair_network, batch).cost.total)


def test_node_only_optimum(pair_network, linked_slice):
    best = brute_force(pair_network, make_batch(linked_slice), problem=Problem.NODES)
    assert best.objective == pytest.approx(100 * 2 / 7 + 100)
    assert best.placement.routes == {}


def test_link_only_optimum(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    a, b = linked_slice.vls[0].vm_keys
    fixed = Placement.build(pair_network, batch, {a: 0, b: 1})
    best = brute_force(pair_network, batch, problem=Problem.LINKS, fixed_placement=fixed)
    assert best.objective == pytest.approx(2 * (100 / 7 + 100) + ZETA * 5e6)
    with pytest.raises(ValueError):
        brute_force(pair_network, batch, problem=Problem.LINKS)


def test_infeasible_is_none(pair_network):
    batch = make_batch(make_slice(0, vm_count=3, compute=4000))
    assert brute_force(pair_network, batch) is None
    with pytest.raises(ValueError):
        brute_force(pair_network, batch, problem="bogus")


def test_oracle_agrees():
    report = run_oracle(instances=15, seed=3)
    assert report.ok, report.to_dict()
    assert report.checked >= 30


@pytest.mark.slow
def test_oracle_full_run():
    report = run_oracle()
    assert report.ok, report.to_dict()
    assert report.checked >= 400
