"""Discrete-time datacenter simulation at a fixed scheduling interval."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .detection import DetectorConfig, DetectorKind, Verdict, detect, with_state
from .domain import ClusterState, HostSpec, HostState, LoadState, UtilizationSample, VmSpec, validate_cluster
from .migration import Candidate, MigrationPlan, place_vms, plan_migrations
from .power import host_power, migration_time
from .workload import WorkloadTrace

log = logging.getLogger(__name__)

FULL_UTILIZATION = 1.0 - 1e-9

# HP ProLiant ML110 G4 / G5: 2 cores at 1860 / 2660 MHz, 4 GB, 1 GB/s.
# Idle/max power figures are commonly published SPECpower values for these models.
HOST_G4 = HostSpec("G4", 2 * 1860.0, 4096.0, 1024.0, 86.0, 117.0)
HOST_G5 = HostSpec("G5", 2 * 2660.0, 4096.0, 1024.0, 93.7, 135.0)

# single-core VM types: (mips, ram MB, bw MB/s)
VM_TYPES = ((1860.0, 870.0, 100.0), (1000.0, 613.0, 100.0), (500.0, 613.0, 100.0))


def default_hosts(n: int) -> tuple[HostSpec, ...]:
    """Alternate G4 and G5 hosts."""
    return tuple(HOST_G4 if i % 2 == 0 else HOST_G5 for i in range(n))


def default_vms(vm_ids: Sequence[str]) -> tuple[VmSpec, ...]:
    return tuple(VmSpec(vm, *VM_TYPES[k % len(VM_TYPES)]) for k, vm in enumerate(vm_ids))


@dataclass(frozen=True)
class EngineConfig:
    host_specs: tuple[HostSpec, ...] = field(default_factory=lambda: default_hosts(25))
    detector: DetectorConfig = DetectorConfig()
    interval_seconds: float = 300.0
    migration_bw_fraction: float = 0.5
    migration_degradation: float = 0.1
    window: int = 12
    seed: int = 0
    vm_specs: tuple[VmSpec, ...] | None = None
    accounting: str = "pre-migration"
    check_invariants: bool = False

    def __post_init__(self):
        if not self.interval_seconds > 0:
            raise ValueError("interval_seconds must be positive")
        for name in ("migration_bw_fraction", "migration_degradation"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if self.accounting not in ("pre-migration", "post-migration"):
            raise ValueError(f"unknown accounting mode {self.accounting!r}")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if not self.host_specs:
            raise ValueError("need at least one host")


@dataclass(frozen=True)
class MigrationRecord:
    vm: str
    source: int
    destination: int
    duration: float  # s
    degradation: float  # MIPS*s of lost cpu work


@dataclass
class IntervalEvent:
    """What happened in one scheduling interval.

    All metrics are computed from these records alone.
    """

    index: int
    clock: float
    interval_seconds: float
    verdicts: dict[int, str]
    migrations: list[MigrationRecord]
    activated: list[int]
    deactivated: list[int]
    failed_evacuations: list[int]
    power: dict[int, float]  # W, active hosts only
    full_utilization: list[int]
    vm_requested: dict[str, float]  # MIPS*s requested this interval
    vm_intervals: int
    breached_vm_intervals: int
    flags: list[str] = field(default_factory=list)


class PlacementError(RuntimeError):
    def __init__(self, unplaced):
        super().__init__(f"initial placement failed for VMs {sorted(unplaced)}")
        self.unplaced = set(unplaced)


def build_cluster(config: EngineConfig, vm_specs: Sequence[VmSpec]) -> ClusterState:
    return ClusterState(
        hosts=[HostState(spec) for spec in config.host_specs],
        vms={vm.id: vm for vm in vm_specs},
    )


def initial_placement(cluster: ClusterState, samples: Mapping[str, UtilizationSample]) -> None:
    cluster.vm_samples.update(samples)
    requests = [(vm, cluster.vm_load(vm)) for vm in cluster.vms]
    candidates = {
        i: Candidate(h.spec, cluster.host_load(i), h.active) for i, h in enumerate(cluster.hosts)
    }
    placement = place_vms(requests, candidates)
    if placement.unplaced:
        raise PlacementError(placement.unplaced)
    for vm, index in placement.mapping.items():
        host = cluster.hosts[index]
        if not host.active:
            host.active = True
            host.history.clear()
        host.resident_vms.append(vm)
        cluster.vm_assignment[vm] = index


def _detector_rng(seed: int, host: int, interval: int) -> np.random.Generator:
    return np.random.default_rng([seed, host, interval])


def _verdicts(cluster: ClusterState, config: EngineConfig, interval: int) -> dict[int, Verdict]:
    det = config.detector
    verdicts = {}
    for i, host in enumerate(cluster.hosts):
        if host.active:
            verdicts[i] = detect(host.history, det, _detector_rng(config.seed, i, interval))
    if det.kind is not DetectorKind.MR_MOSLO:
        # single-threshold baselines: idle hosts plus the least utilized busy host are underloaded
        for i in verdicts:
            if not cluster.hosts[i].resident_vms and verdicts[i].state is LoadState.NORMAL:
                verdicts[i] = with_state(verdicts[i], LoadState.UNDERLOADED)
        busy = [
            i for i, v in verdicts.items()
            if v.state is LoadState.NORMAL and cluster.hosts[i].resident_vms
        ]
        if busy:
            lowest = min(busy, key=lambda i: (cluster.hosts[i].history[-1].cpu, i))
            verdicts[lowest] = with_state(verdicts[lowest], LoadState.UNDERLOADED)
    return verdicts


def _execute(cluster: ClusterState, plan: MigrationPlan, config: EngineConfig) -> list[MigrationRecord]:
    records = []
    for move in plan.moves:
        vm = cluster.vms[move.vm]
        sample = cluster.vm_samples[move.vm]
        duration = migration_time(
            sample.ram * vm.ram_request,
            cluster.hosts[move.source].spec.bw_capacity,
            config.migration_bw_fraction,
        )
        degradation = config.migration_degradation * sample.cpu * vm.mips_request * duration
        records.append(MigrationRecord(move.vm, move.source, move.destination, duration, degradation))
        dest = cluster.hosts[move.destination]
        if not dest.active:
            dest.active = True
            dest.history.clear()
        cluster.move_vm(move.vm, move.destination)
    return records


def _account(cluster: ClusterState, dt: float):
    """Power, 100%-utilization time and capacity breaches of the active hosts."""
    power: dict[int, float] = {}
    full: list[int] = []
    vm_intervals = breached = 0
    for i, host in enumerate(cluster.hosts):
        if not host.active:
            continue
        util = cluster.host_utilization(i)
        power[i] = host_power(host.spec, util.cpu)
        host.total_active_seconds += dt
        if util.cpu >= FULL_UTILIZATION:
            host.total_full_utilization_seconds += dt
            full.append(i)
        n_vms = len(host.resident_vms)
        vm_intervals += n_vms
        if cluster.host_demand_mips(i) > host.spec.mips_capacity:
            breached += n_vms
    return power, full, vm_intervals, breached


def step(
    cluster: ClusterState,
    samples: Mapping[str, UtilizationSample],
    config: EngineConfig,
) -> tuple[ClusterState, IntervalEvent]:
    """Advance the cluster by one scheduling interval (in place).

    Samples are recorded, every active host is classified and a migration
    plan is built.  With ``accounting="pre-migration"`` (the default) the
    interval's energy and full-utilization time are billed for the placement
    that produced the samples and the plan runs afterwards; with
    ``"post-migration"`` the plan runs first and the new placement is billed.
    Hosts emptied by evacuation are switched off at the end of the interval.
    """
    interval = int(round(cluster.clock / config.interval_seconds))
    dt = config.interval_seconds
    missing = [vm for vm in cluster.vms if vm not in samples]
    if missing:
        raise KeyError(f"no sample for VM {missing[0]} at interval {interval}")

    for vm in cluster.vms:
        cluster.vm_samples[vm] = samples[vm]
        hist = cluster.vm_cpu_history.setdefault(vm, [])
        hist.append(samples[vm].cpu)
        if len(hist) > config.window:
            del hist[0]
    for i, host in enumerate(cluster.hosts):
        if host.active:
            host.record(cluster.host_utilization(i), config.window)

    verdicts = _verdicts(cluster, config, interval)
    flags = sorted({f"host {i}: {flag}" for i, v in verdicts.items() for flag in v.flags})
    plan = plan_migrations(cluster, verdicts, config.detector)

    if config.accounting == "pre-migration":
        usage = _account(cluster, dt)
        records = _execute(cluster, plan, config)
    else:
        records = _execute(cluster, plan, config)
        usage = _account(cluster, dt)
    power, full, vm_intervals, breached = usage

    for i in sorted(plan.deactivations):
        host = cluster.hosts[i]
        host.active = False
        host.history.clear()

    event = IntervalEvent(
        index=interval,
        clock=cluster.clock,
        interval_seconds=dt,
        verdicts={i: v.state.value for i, v in verdicts.items()},
        migrations=records,
        activated=sorted(plan.activations),
        deactivated=sorted(plan.deactivations),
        failed_evacuations=sorted(plan.failed_evacuations),
        power=power,
        full_utilization=full,
        vm_requested={vm: spec.mips_request * dt for vm, spec in cluster.vms.items()},
        vm_intervals=vm_intervals,
        breached_vm_intervals=breached,
        flags=flags,
    )
    cluster.clock += dt
    if config.check_invariants:
        problems = validate_cluster(cluster)
        if problems:
            raise AssertionError(f"interval {interval}: {problems}")
    return cluster, event


def run_simulation(config: EngineConfig, trace: WorkloadTrace, *, keep_cluster: bool = False):
    """Simulate the whole trace and return a `SimulationResult`.

    With ``keep_cluster=True`` the final `ClusterState` is returned as well.
    """
    from .metrics import summarize

    if trace.n_intervals < 1 or not trace.series:
        raise ValueError("trace is empty")
    vm_specs = config.vm_specs or default_vms(trace.vm_ids)
    unknown = set(trace.vm_ids) ^ {vm.id for vm in vm_specs}
    if unknown:
        raise ValueError(f"trace and VM catalog disagree on VMs {sorted(unknown)[:5]}")
    cluster = build_cluster(config, vm_specs)
    initial_placement(cluster, trace.interval(0))
    events = []
    for t in range(trace.n_intervals):
        cluster, event = step(cluster, trace.interval(t), config)
        events.append(event)
    result = summarize(events)
    return (result, cluster) if keep_cluster else result
