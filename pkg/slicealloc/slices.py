"""
Tenants' slice requests s_{t,k} = (VMs, VLs) and request batches.

Keys used throughout the package:
    SliceId = (tenant, slice)
    VmKey   = (tenant, slice, vm index)
    VlKey   = (tenant, slice, vl index)
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidSliceRequest
from .topology import ResourceKind, Resources

SliceId = tuple[int, int]
VmKey = tuple[int, int, int]
VlKey = tuple[int, int, int]


class SliceStatus(Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class VlShape(Enum):
    MESH = "mesh"
    CHAIN = "chain"
    STAR = "star"

    def pairs(self, vm_count: int) -> list[tuple[int, int]]:
        match self:
            case VlShape.MESH:
                return list(itertools.combinations(range(vm_count), 2))
            case VlShape.CHAIN:
                return [(m, m + 1) for m in range(vm_count - 1)]
            case VlShape.STAR:
                return [(0, m) for m in range(1, vm_count)]


class DemandKind(Enum):
    COMPUTE = "compute"
    MEMORY = "memory"
    STORAGE = "storage"
    RATE = "rate"

    @property
    def resource(self) -> ResourceKind | None:
        if self is DemandKind.RATE:
            return None
        return ResourceKind(self.value)


@dataclass(frozen=True)
class VmDemand:
    tenant: int
    slice: int
    vm_id: int
    demand: Resources

    def __post_init__(self):
        values = self.demand.as_array()
        if (values < 0).any() or not (values > 0).any():
            raise InvalidSliceRequest(
                f"VM {self.key}: demands must be >= 0 with at least one > 0"
            )

    @property
    def slice_ref(self) -> SliceId:
        return self.tenant, self.slice

    @property
    def key(self) -> VmKey:
        return self.tenant, self.slice, self.vm_id


@dataclass(frozen=True)
class VlDemand:
    tenant: int
    slice: int
    index: int
    m: int
    m2: int
    rate: float  # Kbps
    max_delay: float  # ms

    def __post_init__(self):
        if self.m == self.m2:
            raise InvalidSliceRequest(f"VL {self.key}: endpoints must differ")
        if self.rate <= 0:
            raise InvalidSliceRequest(f"VL {self.key}: rate must be positive")
        if self.max_delay < 0:
            raise InvalidSliceRequest(f"VL {self.key}: max_delay must be >= 0")

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.m, self.m2

    @property
    def key(self) -> VlKey:
        return self.tenant, self.slice, self.index

    @property
    def vm_keys(self) -> tuple[VmKey, VmKey]:
        return (self.tenant, self.slice, self.m), (self.tenant, self.slice, self.m2)


@dataclass(frozen=True)
class SliceRequest:
    tenant: int
    slice: int
    vms: tuple[VmDemand, ...]
    vls: tuple[VlDemand, ...] = ()
    status: SliceStatus = SliceStatus.PENDING

    def __post_init__(self):
        vm_ids = {vm.vm_id for vm in self.vms}
        if len(vm_ids) != len(self.vms):
            raise InvalidSliceRequest(f"slice {self.key}: duplicate VM ids")
        if len({vl.index for vl in self.vls}) != len(self.vls):
            raise InvalidSliceRequest(f"slice {self.key}: duplicate VL indices")
        pairs = set()
        for vm in self.vms:
            if vm.slice_ref != self.key:
                raise InvalidSliceRequest(f"VM {vm.key} filed under slice {self.key}")
        for vl in self.vls:
            if (vl.tenant, vl.slice) != self.key:
                raise InvalidSliceRequest(f"VL {vl.key} filed under slice {self.key}")
            if vl.m not in vm_ids or vl.m2 not in vm_ids:
                raise InvalidSliceRequest(f"VL {vl.key} references an unknown VM")
            pair = frozenset(vl.endpoints)
            if pair in pairs:
                raise InvalidSliceRequest(
                    f"slice {self.key}: duplicate VL between {sorted(pair)}"
                )
            pairs.add(pair)

    @property
    def key(self) -> SliceId:
        return self.tenant, self.slice

    def demand(self, kind: DemandKind) -> float:
        """SumUsedCom / SumUsedMem / SumUsedSto / SumUsedRate of this slice."""
        if kind is DemandKind.RATE:
            return sum(vl.rate for vl in self.vls)
        return sum(vm.demand[kind.resource] for vm in self.vms)

    def with_status(self, status: SliceStatus) -> SliceRequest:
        return replace(self, status=status)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tenant": self.tenant,
            "slice": self.slice,
            "vms": [
                {
                    "id": vm.vm_id,
                    "com_mhz": vm.demand.compute,
                    "mem_gb": vm.demand.memory,
                    "sto_gb": vm.demand.storage,
                }
                for vm in self.vms
            ],
            "vls": [
                {
                    "m": vl.m,
                    "m2": vl.m2,
                    "rate_kbps": vl.rate,
                    "max_delay_ms": vl.max_delay,
                }
                for vl in self.vls
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SliceRequest:
        t, k = int(data["tenant"]), int(data["slice"])
        vms = tuple(
            VmDemand(
                t,
                k,
                int(item["id"]),
                Resources(
                    float(item["com_mhz"]), float(item["mem_gb"]), float(item["sto_gb"])
                ),
            )
            for item in data["vms"]
        )
        vls = tuple(
            VlDemand(
                t,
                k,
                index,
                int(item["m"]),
                int(item["m2"]),
                float(item["rate_kbps"]),
                float(item["max_delay_ms"]),
            )
            for index, item in enumerate(data.get("vls", []))
        )
        return cls(t, k, vms, vls)


@dataclass(frozen=True)
class RequestBatch:
    slices: tuple[SliceRequest, ...] = ()
    _by_key: dict[SliceId, SliceRequest] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        ordered = tuple(sorted(self.slices, key=lambda s: s.key))
        by_key = {s.key: s for s in ordered}
        if len(by_key) != len(ordered):
            raise InvalidSliceRequest("slice indices (t, k) must be unique")
        object.__setattr__(self, "slices", ordered)
        object.__setattr__(self, "_by_key", by_key)

    def __len__(self) -> int:
        return len(self.slices)

    def __iter__(self) -> Iterator[SliceRequest]:
        return iter(self.slices)

    def __contains__(self, key: SliceId) -> bool:
        return key in self._by_key

    def get(self, key: SliceId) -> SliceRequest:
        return self._by_key[key]

    @property
    def keys(self) -> list[SliceId]:
        return [s.key for s in self.slices]

    @property
    def tenant_count(self) -> int:
        """T"""
        return len({s.tenant for s in self.slices})

    @property
    def slices_per_tenant(self) -> dict[int, int]:
        """K_t per tenant"""
        counts: dict[int, int] = {}
        for s in self.slices:
            counts[s.tenant] = counts.get(s.tenant, 0) + 1
        return counts

    def vms(self) -> Iterator[VmDemand]:
        for s in self.slices:
            yield from s.vms

    def vls(self) -> Iterator[VlDemand]:
        for s in self.slices:
            yield from s.vls

    def without(self, keys: Iterable[SliceId]) -> RequestBatch:
        dropped = set(keys)
        return RequestBatch(tuple(s for s in self.slices if s.key not in dropped))

    def only(self, keys: Iterable[SliceId]) -> RequestBatch:
        kept = set(keys)
        return RequestBatch(tuple(s for s in self.slices if s.key in kept))

    def with_status(self, status: SliceStatus) -> RequestBatch:
        return RequestBatch(tuple(s.with_status(status) for s in self.slices))

    def to_dict(self) -> dict[str, Any]:
        return {"slices": [s.to_dict() for s in self.slices]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RequestBatch:
        try:
            return cls(tuple(SliceRequest.from_dict(item) for item in data["slices"]))
        except KeyError as exc:
            raise InvalidSliceRequest(f"slice JSON is missing field {exc}") from exc

    @classmethod
    def load(cls, filename: Path) -> RequestBatch:
        with open(filename) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class DemandParams:
    """Per-VM demands are fixed, per-VL demands are drawn from ranges."""

    compute: float = 1000.0
    memory: float = 64.0
    storage: float = 120.0
    rate: tuple[float, float] = (1e4, 1.1e5)
    max_delay: tuple[float, float] = (5.0, 14.0)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DemandParams:
        values = dict(data)
        for name in ("rate", "max_delay"):
            if name in values:
                values[name] = tuple(values[name])
        try:
            return cls(**values)
        except TypeError as exc:
            raise InvalidSliceRequest(f"unknown demand parameter: {exc}") from exc


def generate_batch(
    tenant_count: int,
    slices_per_tenant: int,
    vms_per_slice: int,
    vl_shape: VlShape = VlShape.MESH,
    seed: int = 0,
    params: DemandParams | None = None,
) -> RequestBatch:
    """
    Draws are made tenant by tenant, so the batch for T tenants is a prefix
    of the batch for T + 1 tenants under the same seed.
    """
    if min(tenant_count, slices_per_tenant, vms_per_slice) < 1:
        raise InvalidSliceRequest("all counts must be at least 1")
    params = params or DemandParams()
    rng = np.random.default_rng(seed)
    demand = Resources(params.compute, params.memory, params.storage)

    slices = []
    for t in range(tenant_count):
        for k in range(slices_per_tenant):
            vms = tuple(VmDemand(t, k, m, demand) for m in range(vms_per_slice))
            vls = []
            for index, (m, m2) in enumerate(vl_shape.pairs(vms_per_slice)):
                rate = float(rng.uniform(*params.rate))
                max_delay = float(rng.uniform(*params.max_delay))
                vls.append(VlDemand(t, k, index, m, m2, rate, max_delay))
            slices.append(SliceRequest(t, k, vms, tuple(vls)))
    return RequestBatch(tuple(slices))


@dataclass(frozen=True)
class DemandTotals:
    per_slice: dict[SliceId, float]
    total: float


def total_demand(batch: RequestBatch, which: DemandKind) -> DemandTotals:
    per_slice = {s.key: s.demand(which) for s in batch}
    return DemandTotals(per_slice, sum(per_slice.values()))
