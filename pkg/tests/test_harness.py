import json
import math
from dataclasses import replace

import pytest

from slicealloc.disjoint import run_dra_pipeline
from slicealloc.errors import ConfigError
from slicealloc.harness import (
    ScenarioConfig,
    SweepRecord,
    acceptance_gap,
    collapse_thresholds,
    mean_by_tenants,
    paired,
    run_sweep,
)
from slicealloc.jra import solve_jra

TINY = dict(
    node_count=2,
    tenant_max=2,
    vms_per_slice=2,
    replications=1,
    solver="internal",
    time_limit=None,
)


def record(method, tenants, accepted, offered=None, replication=0, **kw):
    values = dict(
        total_cost=1.0, beta=0.0, power_w=1.0, wall_ms=1.0, collapse=False, time_limited=False
    )
    values.update(kw)
    return SweepRecord(
        method, tenants, replication, offered or tenants, accepted, **values
    )


def test_defaults_match_published_setup():
    config = ScenarioConfig()
    assert config.node_count == 4
    assert list(config.tenant_range) == list(range(1, 17))
    assert config.vms_per_slice == 3 and config.slices_per_tenant == 1
    assert config.weights.upsilon == 1.0 and config.weights.zeta == 9e-5
    assert config.topology_params.max_hops == 4


@pytest.mark.parametrize(
    "values",
    [
        {"tenant_min": 0},
        {"tenant_min": 5, "tenant_max": 4},
        {"solver": "cplex"},
        {"vl_shape": "ring"},
        {"time_limit": 0},
        {"zeta": -1},
    ],
)
def test_invalid_config(values):
    with pytest.raises(ConfigError):
        ScenarioConfig(**values)


def test_config_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seed": 3, "max_hops": 2, "topology": {"compute": 5000}}))
    config = ScenarioConfig.load(path)
    assert config.seed == 3
    assert config.topology.compute == 5000
    assert config.topology_params.max_hops == 2
    assert ScenarioConfig.from_dict(config.to_dict()) == config


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown config keys"):
        ScenarioConfig.from_dict({"tenants": 3})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"topology": {"bogus": 1}})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ScenarioConfig.load(bad)


def test_replication_seeds():
    config = ScenarioConfig(replications=3)
    seeds = config.replication_seeds()
    assert len(set(seeds)) == 3
    assert seeds == ScenarioConfig(replications=3).replication_seeds()
    assert seeds != ScenarioConfig(seed=1, replications=3).replication_seeds()


def test_scenarios_share_topology_and_prefix():
    config = ScenarioConfig(replications=2)
    net_a, small = config.scenario(1, 2)
    net_b, large = config.scenario(1, 5)
    assert net_a.to_dict() == net_b.to_dict()
    assert small.slices == large.slices[:2]


def test_tiny_sweep():
    config = ScenarioConfig(**TINY)
    records = run_sweep(config)
    assert [(r.method, r.tenants) for r in records] == [
        ("JRA", 1),
        ("JRA", 2),
        ("DRA", 1),
        ("DRA", 2),
    ]
    for r in records:
        assert r.acceptance_ratio == 1.0
        assert r.rejected == 0
        assert not r.time_limited
        assert r.total_cost == pytest.approx(
            config.zeta * r.beta + config.upsilon * r.power_w, rel=1e-6
        )
    jra, dra = records[0], records[2]
    assert jra.total_cost <= dra.total_cost * (1 + 1e-6) + 1e-6


def test_sweep_is_deterministic():
    config = ScenarioConfig(**TINY)
    first = [replace(r, wall_ms=0) for r in run_sweep(config)]
    second = [replace(r, wall_ms=0) for r in run_sweep(config)]
    assert first == second


def test_acceptance_gap():
    records = [
        record("JRA", 1, 1),
        record("JRA", 2, 2),
        record("DRA", 1, 1),
        record("DRA", 2, 1),
        record("DRA", 3, 0, time_limited=True),
    ]
    assert acceptance_gap(records) == pytest.approx(0.25)
    assert math.isnan(acceptance_gap(records[:2]))


def test_time_limited_cells_drop_both_methods():
    records = [
        record("JRA", 1, 1),
        record("DRA", 1, 1),
        record("JRA", 2, 0, time_limited=True),
        record("DRA", 2, 0),
        record("JRA", 3, 3),
    ]
    assert [(r.method, r.tenants) for r in paired(records)] == [("JRA", 1), ("DRA", 1)]
    assert acceptance_gap(records) == pytest.approx(0)
    assert mean_by_tenants(records, "DRA", "acceptance_ratio") == ([1], [1.0])


def test_collapse_thresholds():
    records = [
        record("JRA", 6, 6),
        record("JRA", 7, 6),
        record("JRA", 8, 6),
        record("DRA", 6, 4),
        record("DRA", 7, 0, collapse=True),
        record("DRA", 8, 0, collapse=True),
        record("DRA", 7, 3, replication=1),
    ]
    assert collapse_thresholds(records) == {0: 7, 1: None}


def test_collapse_ignores_time_limited_cells():
    records = [
        record("JRA", 5, 5, time_limited=True),
        record("DRA", 5, 0, collapse=True),
        record("JRA", 6, 6),
        record("DRA", 6, 0, collapse=True, time_limited=True),
        record("JRA", 7, 6),
        record("DRA", 7, 0, collapse=True),
    ]
    assert collapse_thresholds(records) == {0: 7}
    assert collapse_thresholds(records[:4]) == {0: None}


def test_jra_cost_grows_with_nested_batches():
    config = ScenarioConfig(**TINY)
    costs = []
    for tenants in config.tenant_range:
        network, batch = config.scenario(0, tenants)
        costs.append(solve_jra(network, batch, config.weights).cost.total)
    assert costs == sorted(costs)
    assert costs[0] < costs[-1]


def test_mean_by_tenants():
    records = [
        record("JRA", 1, 1, replication=0, beta=2.0),
        record("JRA", 1, 1, replication=1, beta=4.0),
        record("JRA", 2, 1, beta=float("nan")),
    ]
    tenants, means = mean_by_tenants(records, "JRA", "beta")
    assert tenants == [1, 2]
    assert means[0] == 3.0
    assert math.isnan(means[1])


@pytest.fixture(scope="module")
def published_sweep():
    config = ScenarioConfig(replications=5, workers=2)
    return config, run_sweep(config)


@pytest.mark.slow
def test_published_sweep_trends(published_sweep):
    config, records = published_sweep
    assert len(records) == 16 * 2 * 5
    assert all(r.acceptance_ratio == 1.0 for r in records if r.tenants == 1)
    for r in records:
        if not r.time_limited and r.accepted:
            assert r.total_cost == pytest.approx(
                config.zeta * r.beta + config.upsilon * r.power_w, rel=1e-6
            )


@pytest.mark.slow
def test_published_acceptance_gap(published_sweep):
    _, records = published_sweep
    assert 0.46 - 0.20 <= acceptance_gap(records) <= 0.46 + 0.20


@pytest.mark.slow
def test_published_collapse_threshold(published_sweep):
    _, records = published_sweep
    thresholds = [t for t in collapse_thresholds(records).values() if t is not None]
    assert thresholds
    assert all(5 <= t <= 10 for t in thresholds)


@pytest.mark.slow
def test_joint_never_costs_more_than_disjoint():
    config = ScenarioConfig()
    for tenants in config.tenant_range:
        network, batch = config.scenario(0, tenants)
        dra = run_dra_pipeline(
            network, batch, config.weights, config.solver, config.time_limit
        )
        if dra.time_limited or dra.cost is None:
            continue
        joint = solve_jra(
            network, dra.accepted, config.weights, config.solver, config.time_limit
        )
        if joint.time_limited:
            continue
        assert joint.cost.total <= dra.combined_cost * (1 + 1e-6) + 1e-6
