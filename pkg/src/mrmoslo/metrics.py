"""Energy and SLA metrics computed from a simulation's event log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

JOULES_PER_KWH = 3.6e6


class UndefinedMetricError(ValueError):
    pass


def slatah(host_times: Iterable[tuple[float, float]]) -> float:
    """Mean over hosts of full-utilization time / active time.

    Hosts that were never active (active time 0) are left out.
    """
    ratios = [toi / tai for toi, tai in host_times if tai > 0]
    if not ratios:
        raise UndefinedMetricError("SLATAH needs at least one host with active time")
    return sum(ratios) / len(ratios)


def pdm(vm_degradation: Iterable[tuple[float, float]]) -> float:
    """Mean over VMs of migration degradation / requested cpu capacity."""
    pairs = list(vm_degradation)
    if not pairs:
        raise UndefinedMetricError("PDM needs at least one VM")
    for _, requested in pairs:
        if requested <= 0:
            raise UndefinedMetricError("requested capacity must be positive")
    return sum(cd / cr for cd, cr in pairs) / len(pairs)


def slav(slatah_value: float, pdm_value: float) -> float:
    return slatah_value * pdm_value


def esv(energy_kwh: float, slav_value: float) -> float:
    return energy_kwh * slav_value


def sla_violation_pct(events) -> float:
    """Share of VM-intervals spent on a host whose cpu demand exceeded capacity, in percent.

    Every VM resident on a breached host counts as one violated VM-interval.
    """
    total = sum(e.vm_intervals for e in events)
    if total == 0:
        return 0.0
    return 100.0 * sum(e.breached_vm_intervals for e in events) / total


def total_energy(events, interval_seconds: float | None = None) -> float:
    """Total energy in kWh: per-host power times interval length, summed."""
    joules = 0.0
    for e in events:
        dt = e.interval_seconds if interval_seconds is None else interval_seconds
        for watts in e.power.values():
            joules += watts * dt
    return joules / JOULES_PER_KWH


def host_times(events) -> dict[int, tuple[float, float]]:
    """Per host (full-utilization seconds, active seconds) from the event log."""
    times: dict[int, list[float]] = {}
    for e in events:
        full = set(e.full_utilization)
        for host in e.power:
            t = times.setdefault(host, [0.0, 0.0])
            t[1] += e.interval_seconds
            if host in full:
                t[0] += e.interval_seconds
    return {h: (t[0], t[1]) for h, t in sorted(times.items())}


def vm_degradation(events) -> dict[str, tuple[float, float]]:
    """Per VM (migration degradation, requested capacity) in MIPS*s."""
    degraded: dict[str, float] = {}
    requested: dict[str, float] = {}
    for e in events:
        for vm, amount in e.vm_requested.items():
            requested[vm] = requested.get(vm, 0.0) + amount
        for m in e.migrations:
            degraded[m.vm] = degraded.get(m.vm, 0.0) + m.degradation
    return {vm: (degraded.get(vm, 0.0), requested[vm]) for vm in requested}


@dataclass
class SimulationResult:
    energy_kwh: float
    sla_violation_pct: float
    slatah: float
    pdm: float
    slav: float
    esv: float
    migrations: int
    events: list = field(default_factory=list, repr=False)

    def row(self) -> dict[str, float | int]:
        return {
            "energy_kwh": self.energy_kwh,
            "sla_pct": self.sla_violation_pct,
            "slatah": self.slatah,
            "pdm": self.pdm,
            "slav": self.slav,
            "esv": self.esv,
            "migrations": self.migrations,
        }


def summarize(events: Sequence) -> SimulationResult:
    events = list(events)
    energy = total_energy(events)
    times = host_times(events)
    s = slatah(times.values()) if times else 0.0
    degradation = vm_degradation(events)
    p = pdm(degradation.values()) if degradation else 0.0
    v = slav(s, p)
    return SimulationResult(
        energy_kwh=energy,
        sla_violation_pct=sla_violation_pct(events),
        slatah=s,
        pdm=p,
        slav=v,
        esv=esv(energy, v),
        migrations=sum(len(e.migrations) for e in events),
        events=events,
    )
