"""Core entity types: hosts, VMs, utilization samples and cluster state."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field


@dataclass(frozen=True, slots=True)
class UtilizationSample:
    """Utilization fractions of one entity over one scheduling interval."""

    cpu: float
    ram: float
    bw: float

    def __post_init__(self):
        for name in ("cpu", "ram", "bw"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} utilization {value!r} outside [0, 1]")
            object.__setattr__(self, name, value)

    @classmethod
    def clamped(cls, cpu: float, ram: float, bw: float) -> "UtilizationSample":
        return cls(_clamp01(cpu), _clamp01(ram), _clamp01(bw))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.cpu, self.ram, self.bw)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


@dataclass(frozen=True, slots=True)
class HostSpec:
    name: str
    mips_capacity: float
    ram_capacity: float  # MB
    bw_capacity: float  # MB/s
    power_idle: float  # W
    power_max: float  # W

    def __post_init__(self):
        if min(self.mips_capacity, self.ram_capacity, self.bw_capacity) <= 0:
            raise ValueError(f"host {self.name!r}: capacities must be positive")
        if not 0 <= self.power_idle <= self.power_max:
            raise ValueError(f"host {self.name!r}: need 0 <= power_idle <= power_max")


@dataclass(frozen=True, slots=True)
class VmSpec:
    id: str
    mips_request: float
    ram_request: float  # MB
    bw_request: float  # MB/s

    def __post_init__(self):
        if min(self.mips_request, self.ram_request, self.bw_request) <= 0:
            raise ValueError(f"vm {self.id!r}: requests must be positive")


class LoadState(enum.Enum):
    OVERLOADED = "overloaded"
    UNDERLOADED = "underloaded"
    NORMAL = "normal"


@dataclass
class HostState:
    spec: HostSpec
    active: bool = False
    resident_vms: list[str] = field(default_factory=list)
    history: list[UtilizationSample] = field(default_factory=list)
    total_active_seconds: float = 0.0
    total_full_utilization_seconds: float = 0.0

    def record(self, sample: UtilizationSample, window: int) -> None:
        """Append to the sliding history, keeping at most `window` entries."""
        self.history.append(sample)
        if len(self.history) > window:
            del self.history[: len(self.history) - window]


@dataclass
class ClusterState:
    """Mutable simulation state.

    Besides the host list and the VM-to-host mapping this carries the VM
    catalog, each VM's latest sample and a bounded per-VM cpu history, which
    the placement and selection policies need.
    """

    hosts: list[HostState]
    vm_assignment: dict[str, int] = field(default_factory=dict)
    clock: float = 0.0
    vms: dict[str, VmSpec] = field(default_factory=dict)
    vm_samples: dict[str, UtilizationSample] = field(default_factory=dict)
    vm_cpu_history: dict[str, list[float]] = field(default_factory=dict)

    def vm_load(self, vm_id: str) -> "Load":
        """Placement load of a VM: current cpu demand, reserved ram and bw."""
        vm = self.vms[vm_id]
        sample = self.vm_samples.get(vm_id)
        cpu = sample.cpu if sample is not None else 0.0
        return Load(cpu * vm.mips_request, vm.ram_request, vm.bw_request)

    def host_load(self, index: int, exclude: frozenset[str] | set[str] = frozenset()) -> "Load":
        total = Load()
        for vm_id in self.hosts[index].resident_vms:
            if vm_id not in exclude:
                total = total + self.vm_load(vm_id)
        return total

    def host_demand_mips(self, index: int, exclude=frozenset()) -> float:
        return self.host_load(index, exclude).cpu

    def host_utilization(self, index: int, exclude=frozenset()) -> UtilizationSample:
        """Host utilization from the actual demand of its resident VMs.

        cpu is total MIPS demand over capacity; ram and bw use the in-use
        amounts (sample fraction times request) over capacity.  Values are
        clamped into [0, 1].
        """
        spec = self.hosts[index].spec
        cpu = ram = bw = 0.0
        for vm_id in self.hosts[index].resident_vms:
            if vm_id in exclude:
                continue
            vm = self.vms[vm_id]
            s = self.vm_samples.get(vm_id)
            if s is None:
                continue
            cpu += s.cpu * vm.mips_request
            ram += s.ram * vm.ram_request
            bw += s.bw * vm.bw_request
        return UtilizationSample.clamped(
            cpu / spec.mips_capacity, ram / spec.ram_capacity, bw / spec.bw_capacity
        )

    def move_vm(self, vm_id: str, destination: int) -> None:
        source = self.vm_assignment[vm_id]
        self.hosts[source].resident_vms.remove(vm_id)
        self.hosts[destination].resident_vms.append(vm_id)
        self.vm_assignment[vm_id] = destination

    def vm_multiset(self) -> Counter:
        return Counter(v for h in self.hosts for v in h.resident_vms)


@dataclass(frozen=True, slots=True)
class Load:
    """Absolute resource amounts: MIPS, MB, MB/s."""

    cpu: float = 0.0
    ram: float = 0.0
    bw: float = 0.0

    def __add__(self, other: "Load") -> "Load":
        return Load(self.cpu + other.cpu, self.ram + other.ram, self.bw + other.bw)

    def __sub__(self, other: "Load") -> "Load":
        return Load(self.cpu - other.cpu, self.ram - other.ram, self.bw - other.bw)

    def fits(self, spec: HostSpec) -> bool:
        return (
            self.cpu <= spec.mips_capacity
            and self.ram <= spec.ram_capacity
            and self.bw <= spec.bw_capacity
        )


def validate_cluster(cluster: ClusterState) -> list[str]:
    """Check the cluster invariants; an empty list means all hold."""
    findings = []
    seen: dict[str, int] = {}
    for index, host in enumerate(cluster.hosts):
        if not host.active and host.resident_vms:
            findings.append(
                f"inactive host occupied: host {index} holds {sorted(host.resident_vms)}"
            )
        if host.total_full_utilization_seconds > host.total_active_seconds:
            findings.append(f"host {index}: full-utilization time exceeds active time")
        for vm_id in host.resident_vms:
            if vm_id in seen:
                findings.append(
                    f"duplicate assignment: vm {vm_id} on hosts {seen[vm_id]} and {index}"
                )
                continue
            seen[vm_id] = index
            assigned = cluster.vm_assignment.get(vm_id)
            if assigned != index:
                findings.append(
                    f"assignment mismatch: vm {vm_id} resides on host {index} "
                    f"but is mapped to {assigned}"
                )
    for vm_id in cluster.vm_assignment:
        if vm_id not in seen:
            findings.append(f"unplaced vm: {vm_id} is mapped but resides on no host")
    return findings
