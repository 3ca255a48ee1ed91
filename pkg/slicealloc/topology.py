"""
Provider network: cloud nodes, physical links and candidate paths.

Every node carries exactly one intra link (u == v) standing for the
high-rate, zero-delay connection between VMs hosted on the same node.
Inter links are undirected; a path from n to n' and its reverse are
separate candidate paths with the same link set.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np

from .errors import DisconnectedGraph, InvalidTopology

logger = logging.getLogger(__name__)

PathKey = tuple[int, int, int]  # (source node, target node, ordinal b)


class ResourceKind(Enum):
    COMPUTE = "compute"
    MEMORY = "memory"
    STORAGE = "storage"


class LinkKind(Enum):
    INTRA = "intra"
    INTER = "inter"


@dataclass(frozen=True)
class Resources:
    compute: float  # MHz
    memory: float  # GB
    storage: float  # GB

    def __getitem__(self, kind: ResourceKind) -> float:
        return getattr(self, kind.value)

    def as_array(self) -> np.ndarray:
        return np.array([self.compute, self.memory, self.storage], dtype=float)


@dataclass(frozen=True)
class CloudNode:
    id: int
    capacity: Resources
    power_idle: float  # W
    power_max: float  # W

    def __post_init__(self):
        if min(self.capacity.as_array()) <= 0:
            raise InvalidTopology(f"node {self.id}: capacities must be positive")
        if not 0 <= self.power_idle <= self.power_max:
            raise InvalidTopology(
                f"node {self.id}: need 0 <= power_idle <= power_max, "
                f"got {self.power_idle} / {self.power_max}"
            )


@dataclass(frozen=True)
class PhysicalLink:
    id: int
    u: int
    v: int
    bandwidth: float  # Kbps
    delay: float  # ms
    unit_cost: float  # $ per Kbps

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise InvalidTopology(f"link {self.id}: bandwidth must be positive")
        if self.delay < 0 or self.unit_cost < 0:
            raise InvalidTopology(f"link {self.id}: delay and cost must be >= 0")

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.u, self.v

    @property
    def kind(self) -> LinkKind:
        return LinkKind.INTRA if self.u == self.v else LinkKind.INTER


@dataclass(frozen=True)
class PhysicalPath:
    source: int
    target: int
    ordinal: int
    links: tuple[PhysicalLink, ...]
    nodes: tuple[int, ...]

    @property
    def key(self) -> PathKey:
        return self.source, self.target, self.ordinal

    @property
    def link_ids(self) -> frozenset[int]:
        return frozenset(link.id for link in self.links)

    def uses(self, link: PhysicalLink | int) -> bool:
        link_id = link if isinstance(link, int) else link.id
        return link_id in self.link_ids

    def indicator(self, link_count: int) -> np.ndarray:
        """Membership vector I over all `link_count` links of the network."""
        row = np.zeros(link_count, dtype=np.int8)
        for link in self.links:
            row[link.id] = 1
        return row

    @property
    def delay(self) -> float:
        return path_delay(self)

    @property
    def unit_cost(self) -> float:
        """Cost of sending 1 Kbps end to end over this path."""
        return sum(link.unit_cost for link in self.links)


def path_delay(path: PhysicalPath) -> float:
    return sum(link.delay for link in path.links)


@dataclass(frozen=True)
class TopologyParams:
    """Defaults are the published simulation parameters."""

    compute: float = 7000.0
    memory: float = 800.0
    storage: float = 2000.0
    power_idle: float = 100.0
    power_max: float = 200.0

    inter_bandwidth: tuple[float, float] = (9e4, 1.9e5)
    inter_delay: tuple[float, float] = (0.1, 4.0)
    # inter link psi = factor * bandwidth, factor drawn from this range
    inter_psi_factor: tuple[float, float] = (1e-3, 1e-2)
    inter_psi: float | None = None  # fixed psi, overrides the factor range

    intra_bandwidth: float = 1e7
    intra_delay: float = 0.0
    intra_psi: float = 1.0

    edge_probability: float = 0.6
    max_hops: int = 4

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TopologyParams:
        values = dict(data)
        for name in ("inter_bandwidth", "inter_delay", "inter_psi_factor"):
            if name in values:
                values[name] = tuple(values[name])
        try:
            return cls(**values)
        except TypeError as exc:
            raise InvalidTopology(f"unknown topology parameter: {exc}") from exc


@dataclass(frozen=True)
class PhysicalNetwork:
    nodes: tuple[CloudNode, ...]
    links: tuple[PhysicalLink, ...]
    paths: Mapping[tuple[int, int], tuple[PhysicalPath, ...]] = field(
        compare=False
    )
    max_hops: int = 4

    @property
    def node_ids(self) -> range:
        return range(len(self.nodes))

    def node(self, n: int) -> CloudNode:
        return self.nodes[n]

    def paths_between(self, n: int, n2: int) -> tuple[PhysicalPath, ...]:
        return self.paths[(n, n2)]

    def path(self, key: PathKey) -> PhysicalPath:
        n, n2, b = key
        return self.paths[(n, n2)][b]

    def all_paths(self) -> Iterator[PhysicalPath]:
        for n in self.node_ids:
            for n2 in self.node_ids:
                yield from self.paths[(n, n2)]

    def intra_link(self, n: int) -> PhysicalLink:
        return self.paths[(n, n)][0].links[0]

    def path_count(self, n: int, n2: int) -> int:
        """B_{n,n'}"""
        return len(self.paths[(n, n2)])

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [
                {
                    "id": node.id,
                    "com_mhz": node.capacity.compute,
                    "mem_gb": node.capacity.memory,
                    "sto_gb": node.capacity.storage,
                    "p_idle_w": node.power_idle,
                    "p_max_w": node.power_max,
                }
                for node in self.nodes
            ],
            "links": [
                {
                    "u": link.u,
                    "v": link.v,
                    "bw_kbps": link.bandwidth,
                    "delay_ms": link.delay,
                    "psi": link.unit_cost,
                }
                for link in self.links
            ],
            "max_hops": self.max_hops,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PhysicalNetwork:
        try:
            raw_nodes = sorted(data["nodes"], key=lambda item: item["id"])
            nodes = [
                CloudNode(
                    id=int(item["id"]),
                    capacity=Resources(
                        float(item["com_mhz"]),
                        float(item["mem_gb"]),
                        float(item["sto_gb"]),
                    ),
                    power_idle=float(item.get("p_idle_w", 100.0)),
                    power_max=float(item.get("p_max_w", 200.0)),
                )
                for item in raw_nodes
            ]
            links = [
                PhysicalLink(
                    id=index,
                    u=int(item["u"]),
                    v=int(item["v"]),
                    bandwidth=float(item["bw_kbps"]),
                    delay=float(item["delay_ms"]),
                    unit_cost=float(item["psi"]),
                )
                for index, item in enumerate(data["links"])
            ]
        except KeyError as exc:
            raise InvalidTopology(f"topology JSON is missing field {exc}") from exc
        return enumerate_paths(nodes, links, int(data.get("max_hops", 4)))

    @classmethod
    def load(cls, filename: Path) -> PhysicalNetwork:
        with open(filename) as f:
            return cls.from_dict(json.load(f))


def _validate(nodes: list[CloudNode], links: list[PhysicalLink]):
    if not nodes:
        raise InvalidTopology("a network needs at least one node")
    if [node.id for node in nodes] != list(range(len(nodes))):
        raise InvalidTopology("node ids must be 0 .. N-1")
    if [link.id for link in links] != list(range(len(links))):
        raise InvalidTopology("link ids must be 0 .. L-1")

    intra_count = [0] * len(nodes)
    seen_pairs: set[frozenset[int]] = set()
    for link in links:
        for end in link.endpoints:
            if not 0 <= end < len(nodes):
                raise InvalidTopology(f"link {link.id} references unknown node {end}")
        if link.kind is LinkKind.INTRA:
            intra_count[link.u] += 1
            continue
        pair = frozenset(link.endpoints)
        if pair in seen_pairs:
            raise InvalidTopology(f"parallel links between nodes {sorted(pair)}")
        seen_pairs.add(pair)

    for n, count in enumerate(intra_count):
        if count != 1:
            raise InvalidTopology(f"node {n} has {count} intra links, expected 1")


def enumerate_paths(
    nodes: list[CloudNode] | tuple[CloudNode, ...],
    links: list[PhysicalLink] | tuple[PhysicalLink, ...],
    max_hops: int = 4,
) -> PhysicalNetwork:
    """
    Fill in B_{n,n'}: all simple paths of at most `max_hops` inter links
    between every ordered node pair, plus the intra self path of each node.

    Paths are ordered by hop count, then by node sequence, so ordinals are
    stable for a given graph.
    """
    if max_hops < 1:
        raise InvalidTopology("max_hops must be at least 1")
    nodes = list(nodes)
    links = list(links)
    _validate(nodes, links)

    graph = nx.Graph()
    graph.add_nodes_from(range(len(nodes)))
    for link in links:
        if link.kind is LinkKind.INTER:
            graph.add_edge(link.u, link.v, link=link)

    paths: dict[tuple[int, int], tuple[PhysicalPath, ...]] = {}
    for link in links:
        if link.kind is LinkKind.INTRA:
            n = link.u
            paths[(n, n)] = (PhysicalPath(n, n, 0, (link,), (n,)),)

    for n in graph.nodes:
        for n2 in graph.nodes:
            if n == n2:
                continue
            node_paths = sorted(
                nx.all_simple_paths(graph, n, n2, cutoff=max_hops),
                key=lambda p: (len(p), p),
            )
            if not node_paths:
                raise DisconnectedGraph(n, n2, max_hops)
            paths[(n, n2)] = tuple(
                PhysicalPath(
                    n,
                    n2,
                    b,
                    tuple(graph.edges[a, z]["link"] for a, z in zip(p, p[1:])),
                    tuple(p),
                )
                for b, p in enumerate(node_paths)
            )

    logger.debug(
        "enumerated %d paths over %d nodes, %d links (max_hops=%d)",
        sum(len(p) for p in paths.values()),
        len(nodes),
        len(links),
        max_hops,
    )
    return PhysicalNetwork(tuple(nodes), tuple(links), paths, max_hops)


def generate_random_topology(
    node_count: int, seed: int, params: TopologyParams | None = None
) -> PhysicalNetwork:
    """
    Erdos-Renyi graph (redrawn until connected) with link parameters drawn
    uniformly from the ranges in `params`. Deterministic for a given seed.
    """
    if node_count < 1:
        raise InvalidTopology("node_count must be at least 1")
    params = params or TopologyParams()
    rng = np.random.default_rng(seed)

    while True:
        graph = nx.gnp_random_graph(
            node_count, params.edge_probability, seed=int(rng.integers(2**32))
        )
        if nx.is_connected(graph):
            break

    nodes = [
        CloudNode(
            id=n,
            capacity=Resources(params.compute, params.memory, params.storage),
            power_idle=params.power_idle,
            power_max=params.power_max,
        )
        for n in range(node_count)
    ]
    links = [
        PhysicalLink(
            id=n,
            u=n,
            v=n,
            bandwidth=params.intra_bandwidth,
            delay=params.intra_delay,
            unit_cost=params.intra_psi,
        )
        for n in range(node_count)
    ]
    for u, v in sorted(tuple(sorted(edge)) for edge in graph.edges):
        bandwidth = float(rng.uniform(*params.inter_bandwidth))
        delay = float(rng.uniform(*params.inter_delay))
        factor = float(rng.uniform(*params.inter_psi_factor))
        psi = params.inter_psi if params.inter_psi is not None else factor * bandwidth
        links.append(
            PhysicalLink(
                id=len(links),
                u=u,
                v=v,
                bandwidth=bandwidth,
                delay=delay,
                unit_cost=psi,
            )
        )

    return enumerate_paths(nodes, links, params.max_hops)
