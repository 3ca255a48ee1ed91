import pytest
from conftest import make_batch, make_slice

from slicealloc.errors import InvalidSliceRequest
from slicealloc.slices import (
    DemandKind,
    DemandParams,
    RequestBatch,
    SliceRequest,
    SliceStatus,
    VlDemand,
    VlShape,
    VmDemand,
    generate_batch,
    total_demand,
)
from slicealloc.topology import Resources


def test_vl_shapes():
    assert VlShape.MESH.pairs(3) == [(0, 1), (0, 2), (1, 2)]
    assert VlShape.CHAIN.pairs(3) == [(0, 1), (1, 2)]
    assert VlShape.STAR.pairs(4) == [(0, 1), (0, 2), (0, 3)]
    assert VlShape.MESH.pairs(1) == []


def test_generated_batch_defaults():
    batch = generate_batch(3, 1, 3, seed=1)
    assert len(batch) == 3
    assert batch.tenant_count == 3
    assert batch.slices_per_tenant == {0: 1, 1: 1, 2: 1}
    for s in batch:
        assert len(s.vms) == 3 and len(s.vls) == 3
        assert all(vm.demand == Resources(1000, 64, 120) for vm in s.vms)
        for vl in s.vls:
            assert 1e4 <= vl.rate <= 1.1e5
            assert 5 <= vl.max_delay <= 14


def test_generated_batches_are_prefixes():
    small = generate_batch(2, 1, 3, seed=9)
    large = generate_batch(5, 1, 3, seed=9)
    assert small.slices == large.slices[:2]


def test_batch_is_sorted_and_unique():
    batch = make_batch(make_slice(2), make_slice(0, 1), make_slice(0, 0))
    assert batch.keys == [(0, 0), (0, 1), (2, 0)]
    with pytest.raises(InvalidSliceRequest, match="unique"):
        make_batch(make_slice(1), make_slice(1))


def test_without_and_only():
    batch = make_batch(make_slice(0), make_slice(1), make_slice(2))
    assert batch.without([(1, 0)]).keys == [(0, 0), (2, 0)]
    assert batch.only([(1, 0), (5, 0)]).keys == [(1, 0)]
    assert (1, 0) in batch and (7, 0) not in batch


def test_slice_demands():
    s = make_slice(0, vm_count=3, compute=500, vls=((0, 1, 10.0, 5.0), (1, 2, 30.0, 5.0)))
    assert s.demand(DemandKind.COMPUTE) == 1500
    assert s.demand(DemandKind.MEMORY) == 192
    assert s.demand(DemandKind.RATE) == 40
    totals = total_demand(make_batch(s, make_slice(1, compute=250)), DemandKind.COMPUTE)
    assert totals.per_slice == {(0, 0): 1500, (1, 0): 500}
    assert totals.total == 2000


def test_invalid_requests():
    with pytest.raises(InvalidSliceRequest):
        VmDemand(0, 0, 0, Resources(0, 0, 0))
    with pytest.raises(InvalidSliceRequest):
        VlDemand(0, 0, 0, 1, 1, 10.0, 5.0)
    with pytest.raises(InvalidSliceRequest):
        VlDemand(0, 0, 0, 0, 1, 0.0, 5.0)
    with pytest.raises(InvalidSliceRequest, match="unknown VM"):
        make_slice(0, vm_count=2, vls=((0, 5, 10.0, 5.0),))
    with pytest.raises(InvalidSliceRequest, match="duplicate VL"):
        make_slice(0, vls=((0, 1, 10.0, 5.0), (1, 0, 20.0, 5.0)))


def test_vm_filed_under_wrong_slice():
    vm = VmDemand(1, 0, 0, Resources(1, 1, 1))
    with pytest.raises(InvalidSliceRequest, match="filed under"):
        SliceRequest(0, 0, (vm,))


def test_status_updates():
    batch = make_batch(make_slice(0), make_slice(1))
    accepted = batch.with_status(SliceStatus.ACCEPTED)
    assert all(s.status is SliceStatus.ACCEPTED for s in accepted)
    assert all(s.status is SliceStatus.PENDING for s in batch)


def test_json_round_trip():
    batch = generate_batch(2, 2, 3, VlShape.CHAIN, seed=4)
    loaded = RequestBatch.from_dict(batch.to_dict())
    assert loaded == batch


def test_missing_json_field():
    with pytest.raises(InvalidSliceRequest, match="missing"):
        RequestBatch.from_dict({"slices": [{"tenant": 0, "slice": 0}]})


def test_demand_params_from_dict():
    params = DemandParams.from_dict({"compute": 2000, "rate": [1, 2]})
    assert params.compute == 2000 and params.rate == (1, 2)
    with pytest.raises(InvalidSliceRequest):
        DemandParams.from_dict({"bogus": 1})
