from __future__ import annotations

import pytest

from slicealloc.slices import RequestBatch, SliceRequest, VlDemand, VmDemand
from slicealloc.topology import (
    CloudNode,
    PhysicalLink,
    PhysicalNetwork,
    Resources,
    enumerate_paths,
)


def make_network(
    node_count: int = 2,
    inter: tuple[tuple[int, int, float, float, float], ...] = ((0, 1, 1e5, 2.0, 500.0),),
    compute: float = 7000.0,
    memory: float = 800.0,
    storage: float = 2000.0,
    intra_bandwidth: float = 1e7,
    max_hops: int = 4,
) -> PhysicalNetwork:
    """Intra links get ids 0..N-1, `inter` entries are (u, v, bw, delay, psi)."""
    nodes = [
        CloudNode(n, Resources(compute, memory, storage), 100.0, 200.0)
        for n in range(node_count)
    ]
    links = [PhysicalLink(n, n, n, intra_bandwidth, 0.0, 1.0) for n in range(node_count)]
    for u, v, bw, delay, psi in inter:
        links.append(PhysicalLink(len(links), u, v, bw, delay, psi))
    return enumerate_paths(nodes, links, max_hops)


def make_slice(
    tenant: int,
    k: int = 0,
    vm_count: int = 2,
    compute: float = 1000.0,
    vls: tuple[tuple[int, int, float, float], ...] = (),
) -> SliceRequest:
    """`vls` entries are (m, m2, rate, max_delay)."""
    vms = tuple(
        VmDemand(tenant, k, m, Resources(compute, 64.0, 120.0)) for m in range(vm_count)
    )
    links = tuple(
        VlDemand(tenant, k, i, m, m2, rate, delay)
        for i, (m, m2, rate, delay) in enumerate(vls)
    )
    return SliceRequest(tenant, k, vms, links)


def make_batch(*slices: SliceRequest) -> RequestBatch:
    return RequestBatch(tuple(slices))


@pytest.fixture
def pair_network() -> PhysicalNetwork:
    return make_network()


@pytest.fixture
def triangle_network() -> PhysicalNetwork:
    return make_network(
        3,
        inter=(
            (0, 1, 1e5, 1.0, 100.0),
            (0, 2, 1e5, 1.0, 300.0),
            (1, 2, 1e5, 1.0, 100.0),
        ),
        max_hops=2,
    )


@pytest.fixture
def linked_slice() -> SliceRequest:
    return make_slice(0, vls=((0, 1, 1e4, 10.0),))
