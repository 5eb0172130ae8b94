"""Per-VM utilization traces: CSV ingestion, rendering and synthetic generation.

CSV format: UTF-8, header ``time,vm_id,cpu,ram,bw``, time in seconds,
rows in any order.  All VMs must share the same set of time stamps, which
must be a regular grid ``0, dt, 2*dt, ...`` offset by the first time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .domain import UtilizationSample

HEADER = ("time", "vm_id", "cpu", "ram", "bw")
DEFAULT_INTERVAL = 300.0


class TraceParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceStructureError(ValueError):
    pass


@dataclass
class WorkloadTrace:
    interval_seconds: float
    series: dict[str, list[UtilizationSample]]
    start_time: float = 0.0
    clamp_warnings: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.interval_seconds > 0:
            raise ValueError("interval_seconds must be positive")
        lengths = {len(s) for s in self.series.values()}
        if len(lengths) > 1:
            raise TraceStructureError(f"VM sequences have differing lengths {sorted(lengths)}")
        if lengths and lengths.pop() < 1:
            raise TraceStructureError("VM sequences must be non-empty")

    @property
    def vm_ids(self) -> list[str]:
        return list(self.series)

    @property
    def n_intervals(self) -> int:
        return len(next(iter(self.series.values()))) if self.series else 0

    def interval(self, index: int) -> dict[str, UtilizationSample]:
        return {vm: seq[index] for vm, seq in self.series.items()}


def _parse_fraction(text: str, column: str, line: int) -> tuple[float, bool]:
    try:
        value = float(text)
    except ValueError:
        raise TraceParseError(line, f"{column}={text!r} is not a decimal") from None
    if math.isnan(value):
        raise TraceParseError(line, f"{column} is NaN")
    clamped = min(1.0, max(0.0, value))
    return clamped, clamped != value


def load_trace(source: IO[str] | str, interval_seconds: float | None = None) -> WorkloadTrace:
    """Parse a trace from a text stream (or a string holding the CSV text).

    Out-of-range utilizations are clamped into [0, 1]; the number of clamped
    values is reported in ``clamp_warnings``.  A trace with a single time
    stamp has no stride of its own and takes ``interval_seconds`` (300 s if
    not given).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceParseError(1, "empty input") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise TraceParseError(1, f"expected header {','.join(HEADER)}, got {','.join(header)}")

    cells: dict[str, dict[float, UtilizationSample]] = {}
    clamps = 0
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise TraceParseError(line, f"expected 5 fields, got {len(row)}")
        time_text, vm_id = row[0].strip(), row[1].strip()
        try:
            t = float(time_text)
        except ValueError:
            raise TraceParseError(line, f"time={time_text!r} is not a number") from None
        if not t >= 0 or math.isinf(t):
            raise TraceParseError(line, f"time must be non-negative, got {time_text}")
        if not vm_id:
            raise TraceParseError(line, "empty vm_id")
        values = []
        for column, text in zip(HEADER[2:], row[2:]):
            value, was_clamped = _parse_fraction(text.strip(), column, line)
            clamps += was_clamped
            values.append(value)
        per_vm = cells.setdefault(vm_id, {})
        if t in per_vm:
            raise TraceParseError(line, f"duplicate sample for vm {vm_id} at time {time_text}")
        per_vm[t] = UtilizationSample(*values)

    if not cells:
        raise TraceStructureError("trace holds no samples")
    time_sets = {vm: frozenset(per_vm) for vm, per_vm in cells.items()}
    reference = next(iter(time_sets.values()))
    for vm, times in time_sets.items():
        if times != reference:
            missing = sorted(reference ^ times)
            raise TraceStructureError(f"ragged series: vm {vm} differs at times {missing[:5]}")
    times = sorted(reference)
    if len(times) == 1:
        interval = interval_seconds or DEFAULT_INTERVAL
    else:
        steps = np.diff(times)
        interval = float(steps[0])
        if interval <= 0 or not np.allclose(steps, interval, rtol=1e-9, atol=0):
            raise TraceStructureError("time stamps are not on a single common interval")
        if interval_seconds is not None and not math.isclose(interval, interval_seconds):
            raise TraceStructureError(f"trace stride {interval} s differs from requested {interval_seconds} s")
    series = {vm: [cells[vm][t] for t in times] for vm in sorted(cells, key=_vm_sort_key)}
    return WorkloadTrace(interval, series, start_time=times[0], clamp_warnings=clamps)


def _vm_sort_key(vm_id: str):
    # numeric ids sort numerically, everything else lexicographically after them
    return (0, int(vm_id), "") if vm_id.isdigit() else (1, 0, vm_id)


def render_trace(trace: WorkloadTrace) -> str:
    """Serialize a trace to CSV text that ``load_trace`` reads back exactly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for i in range(trace.n_intervals):
        t = trace.start_time + i * trace.interval_seconds
        for vm, seq in trace.series.items():
            s = seq[i]
            writer.writerow([repr(float(t)), vm, repr(s.cpu), repr(s.ram), repr(s.bw)])
    return out.getvalue()


def generate_random_workload(
    seed: int,
    n_vms: int,
    n_intervals: int,
    mean: float = 0.5,
    spread: float = 0.4,
    interval_seconds: float = 300.0,
) -> WorkloadTrace:
    """Independent uniform samples on [mean - spread, mean + spread], clamped to [0, 1].

    Each VM gets ``n_intervals`` samples; each resource dimension is drawn
    separately.  VM ids are ``"0" .. str(n_vms - 1)``.
    """
    if n_vms < 1 or n_intervals < 1:
        raise ValueError("n_vms and n_intervals must be >= 1")
    if not 0.0 < mean < 1.0:
        raise ValueError(f"mean must lie in (0, 1), got {mean}")
    if spread < 0:
        raise ValueError(f"spread must be >= 0, got {spread}")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(mean - spread, mean + spread, size=(n_vms, n_intervals, 3))
    draws = np.clip(draws, 0.0, 1.0)
    series = {
        str(v): [UtilizationSample(*map(float, draws[v, t])) for t in range(n_intervals)]
        for v in range(n_vms)
    }
    return WorkloadTrace(interval_seconds, series)


def intervals_for_tasks(tasks: int, n_vms: int) -> int:
    """Synthetic trace length for a task budget: one task is one VM-interval row."""
    return max(1, math.ceil(tasks / n_vms))

