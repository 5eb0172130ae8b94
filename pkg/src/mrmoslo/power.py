"""Linear host power model and live-migration cost."""

from __future__ import annotations

from .domain import HostSpec


def host_power(spec: HostSpec, cpu_utilization: float) -> float:
    """Power draw in watts of an active host at the given cpu utilization."""
    u = min(1.0, max(0.0, cpu_utilization))
    return spec.power_idle + (spec.power_max - spec.power_idle) * u


def migration_time(ram_in_use_mb: float, bw_capacity: float, migration_bw_fraction: float = 0.5) -> float:
    """Seconds to copy a VM's in-use memory over the share of link bandwidth given to migration."""
    if bw_capacity <= 0:
        raise ValueError("bw_capacity must be positive")
    return ram_in_use_mb / (bw_capacity * migration_bw_fraction)
