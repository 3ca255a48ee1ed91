from dataclasses import replace

import pytest
from conftest import make_batch, make_network, make_slice

from slicealloc.errors import InfeasibleAfterAdmission, InvariantViolation, ModelError
from slicealloc.jra import (
    CostWeights,
    Objective,
    Placement,
    bandwidth_cost,
    build_jra_model,
    compute_costs,
    decode_and_cost,
    formulate,
    node_power,
    placement_array,
    solve_jra,
    verify_placement,
)
from slicealloc.milp import MilpSolution, SolveStatus, VarKind, solve_milp
from slicealloc.slices import generate_batch
from slicealloc.topology import generate_random_topology

ZETA = 9e-5


def test_row_counts_for_one_meshed_slice():
    network = generate_random_topology(4, seed=1)
    batch = generate_batch(1, 1, 3, seed=1)
    model = build_jra_model(network, batch)
    counts = model.family_counts()
    assert counts["C1"] == 12
    assert counts["C2"] == 3
    assert counts["C3"] == 12
    assert counts["C4"] == 3
    assert counts["C7"] == 3
    for family in ("C5-a", "C5-b", "C5-c", "C5-d"):
        assert counts[family] == 3 * 16
    assert counts["C6"] == len(network.links)
    assert len(model.index.pi) == 3 * sum(1 for _ in network.all_paths())


def test_no_vls_reduces_to_packing(pair_network):
    model = build_jra_model(pair_network, make_batch(make_slice(0), make_slice(1)))
    assert set(model.family_counts()) == {"C1", "C2", "C3"}
    assert not model.index.pi and not model.index.theta


def test_elastic_rows_and_slack_objective(pair_network, linked_slice):
    model = formulate(
        pair_network, make_batch(linked_slice), elastic=True, objective=Objective.SLACK
    )
    counts = model.family_counts()
    assert counts["C1-a"] == 6 and counts["C6-a"] == 3 and counts["C7-a"] == 1
    assert "C1" not in counts and "C6" not in counts
    slacks = [
        *model.index.sigma_vm.values(),
        *model.index.sigma_bw.values(),
        *model.index.sigma_tau.values(),
    ]
    assert len(slacks) == 6 + 3 + 1
    assert all(model.variables[v].kind is VarKind.CONTINUOUS for v in slacks)
    assert model.objective == {v: 1.0 for v in slacks}


def test_node_power():
    node = make_network(1, inter=()).node(0)
    assert node_power(node, 0.0, 0) == 0
    assert node_power(node, 0.0, 1) == 100
    assert node_power(node, 2000 / 7000, 1) == pytest.approx(128.571, abs=1e-3)
    with pytest.raises(ValueError):
        node_power(node, 0.5, 0)
    with pytest.raises(ValueError):
        node_power(node, 1.5, 1)


def test_bandwidth_cost_intra_and_two_hops(pair_network, triangle_network, linked_slice):
    batch = make_batch(linked_slice)
    vl = linked_slice.vls[0]
    a, b = vl.vm_keys
    together = Placement.build(pair_network, batch, {a: 0, b: 0}, {vl.key: (0, 0, 0)})
    assert bandwidth_cost(together, pair_network, batch) == pytest.approx(1e4)

    detour = Placement.build(triangle_network, batch, {a: 0, b: 2}, {vl.key: (0, 2, 1)})
    assert bandwidth_cost(detour, triangle_network, batch) == pytest.approx(200 * 1e4)
    assert bandwidth_cost(together, pair_network, make_batch(make_slice(0))) == 0


def test_colocation_is_cheapest(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    result = solve_jra(pair_network, batch)
    assert result.solution.status is SolveStatus.OPTIMAL
    placement = result.placement
    hosts = set(placement.hosts.values())
    assert len(hosts) == 1
    (n,) = hosts
    assert placement.active_nodes == [n]
    assert placement.routes == {linked_slice.vls[0].key: (n, n, 0)}
    expected = 100 * 2 / 7 + 100 + ZETA * 1e4
    assert result.cost.total == pytest.approx(expected)
    assert result.solution.objective_value == pytest.approx(expected)


def test_capacity_forces_inter_path(pair_network):
    s = make_slice(0, compute=4000, vls=((0, 1, 1e4, 10.0),))
    result = solve_jra(pair_network, make_batch(s))
    placement = result.placement
    assert placement.host((0, 0, 0)) != placement.host((0, 0, 1))
    route = placement.route(s.vls[0].key)
    assert route[:2] == (placement.host((0, 0, 0)), placement.host((0, 0, 1)))
    assert result.cost.beta == pytest.approx(500 * 1e4)
    power = 2 * (100 * 4000 / 7000 + 100)
    assert result.cost.total == pytest.approx(power + ZETA * 500 * 1e4)


def test_theta_is_the_product(pair_network, linked_slice):
    placement = solve_jra(pair_network, make_batch(linked_slice)).placement
    for (a, b, n, n2), value in placement.theta.items():
        assert value == placement.xi[(a, n)] * placement.xi[(b, n2)]


def test_infeasible_placement_raises(pair_network):
    batch = make_batch(make_slice(0, vm_count=3, compute=4000))
    with pytest.raises(InfeasibleAfterAdmission):
        solve_jra(pair_network, batch)


def test_hand_built_assignment_decodes_unchanged(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    vl = linked_slice.vls[0]
    a, b = vl.vm_keys
    placement = Placement.build(pair_network, batch, {a: 0, b: 1}, {vl.key: (0, 1, 0)})
    model = build_jra_model(pair_network, batch)
    x = placement_array(placement, model)
    assert model.violations(x) == []
    decoded, report = decode_and_cost(
        MilpSolution(SolveStatus.OPTIMAL, x, model.evaluate(x)), model
    )
    assert decoded == placement
    assert report.beta == pytest.approx(500 * 1e4)
    assert report.total == pytest.approx(2 * (100 / 7 + 100) + ZETA * 5e6)


def test_corrupted_assignment_names_c2(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    model = build_jra_model(pair_network, batch)
    solution = solve_milp(model)
    x = solution.assignment.copy()
    for n in pair_network.node_ids:
        x[model.index.xi[((0, 0, 0), n)]] = 0
    with pytest.raises(InvariantViolation) as excinfo:
        decode_and_cost(replace(solution, assignment=x), model)
    assert excinfo.value.tag == "C2"


def test_objective_mismatch_is_reported(pair_network, linked_slice):
    model = build_jra_model(pair_network, make_batch(linked_slice))
    solution = solve_milp(model)
    with pytest.raises(InvariantViolation) as excinfo:
        decode_and_cost(replace(solution, objective_value=solution.objective_value + 1), model)
    assert excinfo.value.tag == "C_Total"


def test_verify_placement_flags_delay(pair_network):
    s = make_slice(0, vls=((0, 1, 1e4, 1.0),))
    batch = make_batch(s)
    vl = s.vls[0]
    a, b = vl.vm_keys
    split = Placement.build(pair_network, batch, {a: 0, b: 1}, {vl.key: (0, 1, 0)})
    assert [p.split()[0] for p in verify_placement(split, pair_network, batch)] == ["C7"]
    wrong_path = Placement.build(pair_network, batch, {a: 0, b: 0}, {vl.key: (0, 1, 0)})
    assert "C5" in [p.split()[0] for p in verify_placement(wrong_path, pair_network, batch)]


def test_delay_forces_colocation(pair_network):
    s = make_slice(0, vls=((0, 1, 1e4, 1.0),))
    placement = solve_jra(pair_network, make_batch(s)).placement
    assert placement.host((0, 0, 0)) == placement.host((0, 0, 1))


def test_compute_costs_matches_components(pair_network, linked_slice):
    batch = make_batch(linked_slice)
    weights = CostWeights(zeta=1e-3, upsilon=2.0)
    result = solve_jra(pair_network, batch, weights)
    report = compute_costs(result.placement, pair_network, batch, weights)
    assert report.total == pytest.approx(1e-3 * report.beta + 2.0 * report.power_total)
    assert report.power_cost == pytest.approx(2.0 * report.power_total)
    assert all(0 <= u <= 1 for u in report.utilization.values())


def test_fixed_placement_must_cover_batch(pair_network, linked_slice):
    partial = Placement({}, {0: 1, 1: 0})
    with pytest.raises(ModelError):
        formulate(pair_network, make_batch(linked_slice), fixed_placement=partial)


def test_negative_weights():
    with pytest.raises(ValueError):
        CostWeights(zeta=-1)


def test_empty_batch_costs_nothing(pair_network):
    result = solve_jra(pair_network, make_batch())
    assert result.cost.total == 0
    assert result.placement.active_nodes == []


def test_random_scenario_with_highs():
    pytest.importorskip("scipy.optimize")
    network = generate_random_topology(4, seed=2)
    batch = generate_batch(2, 1, 3, seed=2)
    result = solve_jra(network, batch, solver="highs")
    # decode_and_cost already re-verified constraints and the objective
    assert result.solution.status is SolveStatus.OPTIMAL
    assert verify_placement(result.placement, network, batch) == []
    assert len(result.placement.hosts) == 6
    assert len(result.placement.routes) == 6


def test_placement_json(pair_network, linked_slice):
    placement = solve_jra(pair_network, make_batch(linked_slice)).placement
    data = placement.to_dict()
    assert len(data["hosts"]) == 2
    assert data["routes"][0]["vl"] == [0, 0, 0]
