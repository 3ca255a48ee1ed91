"""
Experiment sweep: JRA against DRA over growing tenant counts.

Each replication draws one topology and one demand stream from its own
child seed. The batch for T tenants is the first T tenants of that stream,
so every tenant count and both methods see the same requests.
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Iterable, Mapping
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .admission import run_ac_jra
from .disjoint import run_dra_pipeline
from .errors import ConfigError, InvalidSliceRequest, InvalidTopology
from .jra import CostWeights, solve_jra
from .milp import SOLVER_NAMES
from .slices import DemandParams, RequestBatch, VlShape, generate_batch
from .topology import PhysicalNetwork, TopologyParams, generate_random_topology

logger = logging.getLogger(__name__)

METHODS = ("JRA", "DRA")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    node_count: int = 4
    tenant_min: int = 1
    tenant_max: int = 16
    slices_per_tenant: int = 1
    vms_per_slice: int = 3
    vl_shape: str = "mesh"
    upsilon: float = 1.0
    zeta: float = 9e-5
    time_limit: float | None = 120.0
    replications: int = 5
    solver: str = "highs"
    max_hops: int = 4
    workers: int = 1
    topology: TopologyParams = field(default_factory=TopologyParams)
    demands: DemandParams = field(default_factory=DemandParams)

    def __post_init__(self):
        if self.node_count < 1:
            raise ConfigError("node_count must be at least 1")
        if not 1 <= self.tenant_min <= self.tenant_max:
            raise ConfigError("need 1 <= tenant_min <= tenant_max")
        if self.slices_per_tenant < 1 or self.vms_per_slice < 1:
            raise ConfigError("slices_per_tenant and vms_per_slice must be >= 1")
        if self.replications < 1 or self.workers < 1:
            raise ConfigError("replications and workers must be >= 1")
        if self.upsilon < 0 or self.zeta < 0:
            raise ConfigError("cost weights must be >= 0")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")
        if self.max_hops < 1:
            raise ConfigError("max_hops must be at least 1")
        if self.solver not in SOLVER_NAMES:
            raise ConfigError(
                f"unknown solver {self.solver!r}, choose one of {', '.join(SOLVER_NAMES)}"
            )
        try:
            VlShape(self.vl_shape)
        except ValueError:
            raise ConfigError(f"unknown vl_shape {self.vl_shape!r}") from None

    @property
    def tenant_range(self) -> range:
        return range(self.tenant_min, self.tenant_max + 1)

    @property
    def weights(self) -> CostWeights:
        return CostWeights(zeta=self.zeta, upsilon=self.upsilon)

    @property
    def topology_params(self) -> TopologyParams:
        """Topology table with the config's hop limit applied."""
        values = asdict(self.topology)
        values["max_hops"] = self.max_hops
        return TopologyParams(**values)

    def replication_seeds(self) -> list[tuple[int, int]]:
        """(topology seed, demand seed) per replication."""
        children = np.random.SeedSequence(self.seed).spawn(self.replications)
        return [tuple(int(v) for v in child.generate_state(2)) for child in children]

    def scenario(self, replication: int, tenants: int) -> tuple[PhysicalNetwork, RequestBatch]:
        topology_seed, demand_seed = self.replication_seeds()[replication]
        network = generate_random_topology(
            self.node_count, topology_seed, self.topology_params
        )
        batch = generate_batch(
            tenants,
            self.slices_per_tenant,
            self.vms_per_slice,
            VlShape(self.vl_shape),
            demand_seed,
            self.demands,
        )
        return network, batch

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScenarioConfig:
        values = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            if "topology" in values:
                values["topology"] = TopologyParams.from_dict(values["topology"])
            if "demands" in values:
                values["demands"] = DemandParams.from_dict(values["demands"])
        except (InvalidTopology, InvalidSliceRequest) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**values)

    @classmethod
    def load(cls, filename: Path) -> ScenarioConfig:
        try:
            with open(filename) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{filename}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class SweepRecord:
    method: str
    tenants: int
    replication: int
    offered: int
    accepted: int
    total_cost: float
    beta: float
    power_w: float
    wall_ms: float
    collapse: bool = False
    time_limited: bool = False

    @property
    def rejected(self) -> int:
        return self.offered - self.accepted

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.offered if self.offered else 1.0

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return METHODS.index(self.method), self.tenants, self.replication


def run_jra_cell(
    config: ScenarioConfig, replication: int, tenants: int
) -> SweepRecord:
    network, batch = config.scenario(replication, tenants)
    start = time.perf_counter()
    admission = run_ac_jra(network, batch, config.solver, config.time_limit)
    total = beta = power = math.nan
    time_limited = admission.time_limited
    if not admission.time_limited:
        result = solve_jra(
            network, admission.accepted, config.weights, config.solver, config.time_limit
        )
        time_limited |= result.time_limited
        if result.cost is not None:
            total = result.cost.total
            beta = result.cost.beta
            power = result.cost.power_total
    wall = (time.perf_counter() - start) * 1000
    return SweepRecord(
        "JRA",
        tenants,
        replication,
        len(batch),
        len(admission.accepted),
        total,
        beta,
        power,
        wall,
        False,
        time_limited,
    )


def run_dra_cell(
    config: ScenarioConfig, replication: int, tenants: int
) -> SweepRecord:
    network, batch = config.scenario(replication, tenants)
    start = time.perf_counter()
    result = run_dra_pipeline(
        network, batch, config.weights, config.solver, config.time_limit
    )
    wall = (time.perf_counter() - start) * 1000
    cost = result.cost
    return SweepRecord(
        "DRA",
        tenants,
        replication,
        len(batch),
        len(result.accepted),
        cost.total if cost else math.nan,
        cost.beta if cost else math.nan,
        cost.power_total if cost else math.nan,
        wall,
        result.collapse_flag,
        result.time_limited,
    )


def run_cell(
    config: ScenarioConfig, method: str, replication: int, tenants: int
) -> SweepRecord:
    match method:
        case "JRA":
            return run_jra_cell(config, replication, tenants)
        case "DRA":
            return run_dra_cell(config, replication, tenants)
        case _:
            raise ConfigError(f"unknown method {method!r}")


def run_sweep(config: ScenarioConfig) -> list[SweepRecord]:
    cells = [
        (method, replication, tenants)
        for replication in range(config.replications)
        for tenants in config.tenant_range
        for method in METHODS
    ]
    logger.info(
        "sweep: %d cells, tenants %d..%d, %d replications, solver %s",
        len(cells),
        config.tenant_min,
        config.tenant_max,
        config.replications,
        config.solver,
    )
    records = []
    if config.workers == 1:
        for i, cell in enumerate(cells):
            records.append(run_cell(config, *cell))
            logger.info("cell %d/%d done: %s", i + 1, len(cells), cell)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = {
                executor.submit(run_cell, config, *cell): cell for cell in cells
            }
            for i, future in enumerate(as_completed(futures)):
                records.append(future.result())
                logger.info("cell %d/%d done: %s", i + 1, len(cells), futures[future])
    records.sort(key=lambda r: r.sort_key)
    return records


def paired(records: Iterable[SweepRecord]) -> list[SweepRecord]:
    """
    Records of the (replication, tenants) cells that every method present
    finished: one time-limited or missing method drops the whole cell.
    """
    records = list(records)
    methods = {r.method for r in records}
    cells: dict[tuple[int, int], list[SweepRecord]] = {}
    for r in records:
        cells.setdefault((r.replication, r.tenants), []).append(r)
    kept = []
    for cell in cells.values():
        finished = not any(r.time_limited for r in cell)
        if finished and {r.method for r in cell} == methods:
            kept += cell
    return sorted(kept, key=lambda r: r.sort_key)


def mean_by_tenants(
    records: Iterable[SweepRecord], method: str, metric: str
) -> tuple[list[int], list[float]]:
    """Per-tenant-count mean of `metric` over paired, completed replications."""
    by_tenants: dict[int, list[float]] = {}
    for r in paired(records):
        if r.method == method:
            by_tenants.setdefault(r.tenants, []).append(float(getattr(r, metric)))
    tenants = sorted(by_tenants)
    return tenants, [float(np.nanmean(by_tenants[t])) for t in tenants]


def acceptance_gap(records: Iterable[SweepRecord]) -> float:
    """Mean JRA minus mean DRA acceptance ratio over paired cells."""
    done = paired(records)
    means = []
    for method in METHODS:
        ratios = [r.acceptance_ratio for r in done if r.method == method]
        if not ratios:
            return math.nan
        means.append(float(np.mean(ratios)))
    return means[0] - means[1]


def collapse_thresholds(records: Iterable[SweepRecord]) -> dict[int, int | None]:
    """
    Per replication, the smallest tenant count where DRA's link stage
    accepts nothing while JRA still accepts at least one slice. Cells
    where either method hit the time limit are skipped.
    """
    records = list(records)
    jra = {(r.replication, r.tenants): r for r in records if r.method == "JRA"}
    thresholds: dict[int, int | None] = {}
    for r in sorted(records, key=lambda r: r.sort_key):
        if r.method != "DRA":
            continue
        thresholds.setdefault(r.replication, None)
        if thresholds[r.replication] is not None or not r.collapse or r.time_limited:
            continue
        joint = jra.get((r.replication, r.tenants))
        if joint is not None and not joint.time_limited and joint.accepted > 0:
            thresholds[r.replication] = r.tenants
    return thresholds

