"""VM selection, placement and per-interval migration planning."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .detection import DetectorConfig, Verdict, still_overloaded
from .domain import ClusterState, HostSpec, HostState, Load, LoadState
from .power import host_power


@dataclass(frozen=True)
class Move:
    vm: str
    source: int
    destination: int


@dataclass
class MigrationPlan:
    moves: list[Move] = field(default_factory=list)
    deactivations: set[int] = field(default_factory=set)
    failed_evacuations: set[int] = field(default_factory=set)
    activations: set[int] = field(default_factory=set)

    def check(self, verdicts: Mapping[int, Verdict] | None = None) -> list[str]:
        problems = []
        vms = [m.vm for m in self.moves]
        if len(vms) != len(set(vms)):
            problems.append("a vm appears in more than one move")
        for m in self.moves:
            if m.source == m.destination:
                problems.append(f"vm {m.vm} moves onto its own host")
            if verdicts and m.destination in verdicts and verdicts[m.destination].state is LoadState.OVERLOADED:
                problems.append(f"vm {m.vm} moves onto overloaded host {m.destination}")
        return problems


def pearson(a, b) -> float:
    """Pearson correlation; zero-variance inputs give 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt((da @ da) * (db @ db))
    if denom <= 0.0 or not np.isfinite(denom):
        return 0.0
    return float(da @ db / denom)


def select_vm_max_correlation(
    host: HostState | Iterable[str],
    vm_cpu_histories: Mapping[str, Sequence[float]],
) -> str:
    """VM whose cpu series correlates most with the summed series of the others.

    Ties go to the smallest VM id.
    """
    vm_ids = list(host.resident_vms if isinstance(host, HostState) else host)
    if not vm_ids:
        raise ValueError("host has no resident VMs")
    if len(vm_ids) == 1:
        return vm_ids[0]
    series = {vm: np.asarray(vm_cpu_histories[vm], dtype=float) for vm in vm_ids}
    length = min(len(s) for s in series.values())
    series = {vm: s[len(s) - length:] for vm, s in series.items()}
    total = sum(series.values())
    best_vm, best_corr = None, -np.inf
    for vm in sorted(vm_ids, key=_id_key):
        corr = pearson(series[vm], total - series[vm]) if length >= 2 else 0.0
        if corr > best_corr:
            best_vm, best_corr = vm, corr
    return best_vm


def _id_key(vm_id: str):
    return (0, int(vm_id), "") if vm_id.isdigit() else (1, 0, vm_id)


def vm_mips_histories(cluster: ClusterState, vm_ids: Iterable[str]) -> dict[str, list[float]]:
    return {
        vm: [u * cluster.vms[vm].mips_request for u in cluster.vm_cpu_history.get(vm, [])]
        for vm in vm_ids
    }


def drain_overloaded(
    host_index: int,
    cluster: ClusterState,
    verdict: Verdict,
    config: DetectorConfig,
) -> list[str]:
    """Order in which VMs leave an overloaded host.

    VMs are picked by maximum correlation and removed hypothetically until the
    detector's threshold test on the adjusted latest sample clears, or the
    host is empty.
    """
    host = cluster.hosts[host_index]
    if verdict.state is not LoadState.OVERLOADED or not host.resident_vms:
        return []
    remaining = list(host.resident_vms)
    histories = vm_mips_histories(cluster, remaining)
    past = list(host.history[:-1])
    removed: list[str] = []
    while remaining:
        vm = select_vm_max_correlation(remaining, histories)
        remaining.remove(vm)
        removed.append(vm)
        adjusted = cluster.host_utilization(host_index, exclude=set(removed))
        if not still_overloaded(verdict, past + [adjusted], config):
            break
    return removed


@dataclass
class Candidate:
    spec: HostSpec
    used: Load = Load()
    active: bool = True


@dataclass
class Placement:
    mapping: dict[str, int] = field(default_factory=dict)
    unplaced: set[str] = field(default_factory=set)


def power_increase(candidate: Candidate, demand: Load) -> float:
    cap = candidate.spec.mips_capacity
    after = host_power(candidate.spec, (candidate.used.cpu + demand.cpu) / cap)
    before = host_power(candidate.spec, candidate.used.cpu / cap) if candidate.active else 0.0
    return after - before


def place_vms(
    vms: Sequence[tuple[str, Load]],
    candidates: Mapping[int, Candidate],
) -> Placement:
    """Power-aware best fit decreasing.

    VMs go in order of decreasing cpu demand, each to the candidate whose
    estimated power rises least while cpu, ram and bw still fit.  Switching on
    an inactive host costs its full power, idle part included.  Candidate
    loads are updated as VMs are assigned; the caller's mapping is not touched.
    """
    pool = {i: Candidate(c.spec, c.used, c.active) for i, c in candidates.items()}
    result = Placement()
    order = sorted(range(len(vms)), key=lambda k: (-vms[k][1].cpu, k))
    for k in order:
        vm_id, demand = vms[k]
        best, best_increase = None, np.inf
        for index in sorted(pool):
            cand = pool[index]
            if not (cand.used + demand).fits(cand.spec):
                continue
            increase = power_increase(cand, demand)
            if increase < best_increase:
                best, best_increase = index, increase
        if best is None:
            result.unplaced.add(vm_id)
            continue
        result.mapping[vm_id] = best
        pool[best] = Candidate(pool[best].spec, pool[best].used + demand, True)
    return result


def plan_migrations(
    cluster: ClusterState,
    verdicts: Mapping[int, Verdict],
    config: DetectorConfig,
) -> MigrationPlan:
    """Drain overloaded hosts, then try to empty underloaded ones.

    Drained VMs may land on any host that is not overloaded, switching an
    inactive one on if needed.  Underloaded hosts are evacuated all-or-nothing
    in ascending utilization order onto active hosts that are neither
    overloaded, marked for shutdown, nor the host itself.  A host that received
    VMs earlier in the plan is not evacuated.
    """
    plan = MigrationPlan()
    n = len(cluster.hosts)
    used = {i: cluster.host_load(i) for i in range(n)}
    active = {i for i, h in enumerate(cluster.hosts) if h.active}
    overloaded = {i for i, v in verdicts.items() if v.state is LoadState.OVERLOADED}
    received: set[int] = set()

    def candidates(exclude: set[int], require_active: bool) -> dict[int, Candidate]:
        return {
            i: Candidate(cluster.hosts[i].spec, used[i], i in active)
            for i in range(n)
            if i not in exclude
            and i not in overloaded
            and i not in plan.deactivations
            and (i in active or not require_active)
        }

    def record(vm: str, source: int, destination: int) -> None:
        load = cluster.vm_load(vm)
        used[source] = used[source] - load
        used[destination] = used[destination] + load
        plan.moves.append(Move(vm, source, destination))
        received.add(destination)
        if destination not in active:
            active.add(destination)
            plan.activations.add(destination)

    drained: list[tuple[str, int]] = []
    for index in sorted(overloaded):
        for vm in drain_overloaded(index, cluster, verdicts[index], config):
            drained.append((vm, index))
    if drained:
        placement = place_vms(
            [(vm, cluster.vm_load(vm)) for vm, _ in drained],
            candidates(exclude=set(), require_active=False),
        )
        for vm, source in drained:
            if vm in placement.mapping:
                record(vm, source, placement.mapping[vm])

    underloaded = [i for i, v in verdicts.items() if v.state is LoadState.UNDERLOADED]
    underloaded.sort(key=lambda i: (cluster.host_utilization(i).cpu, i))
    for index in underloaded:
        if index in received or index not in active:
            continue
        residents = [vm for vm in cluster.hosts[index].resident_vms]
        placement = place_vms(
            [(vm, cluster.vm_load(vm)) for vm in residents],
            candidates(exclude={index}, require_active=True),
        )
        if placement.unplaced:
            plan.failed_evacuations.add(index)
            continue
        for vm in residents:
            record(vm, index, placement.mapping[vm])
        plan.deactivations.add(index)
    return plan
