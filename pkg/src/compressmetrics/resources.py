"""CPU utilisation and RAM usage from sampled resource traces.

A trace is a sequence of samples ``(t, cpu running total, ram)`` where the
running total is the cumulative CPU busy time in seconds. Utilisation over an
interval is the busy-time delta divided by the wall-time delta and the core
count. Sampler jitter can produce impossible deltas; those intervals are
clamped to [0, 100] and counted instead of aborting the evaluation.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

TRACE_HEADER = ("t_s", "cpu_rt_s", "ram_bytes")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class ResourceTrace:
    t: np.ndarray
    cpu_rt: np.ndarray
    ram: np.ndarray
    gpu_util: Optional[np.ndarray] = None
    label: str = "workload"

    def __post_init__(self):
        for name in ("t", "cpu_rt", "ram"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.gpu_util is not None:
            object.__setattr__(self, "gpu_util", np.asarray(self.gpu_util, dtype=float))
        n = len(self.t)
        if len(self.cpu_rt) != n or len(self.ram) != n or (self.gpu_util is not None and len(self.gpu_util) != n):
            raise TraceError("trace columns differ in length")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise TraceError("timestamps must be strictly increasing")
        if self.label not in ("baseline", "workload"):
            raise TraceError(f"label must be 'baseline' or 'workload', got {self.label!r}")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, float, float]], label: str = "workload") -> "ResourceTrace":
        arr = np.asarray(samples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], label=label)


@dataclass(frozen=True)
class CpuUtilization:
    per_interval: np.ndarray  # percent, clamped
    mean_pct: float
    clamped: int


@dataclass(frozen=True)
class ResourceSummary:
    cpu_utilization_pct: float
    ram_peak: float
    ram_mean: float
    window: tuple[float, float]
    gpu_utilization_pct: Optional[float] = None
    clamped_intervals: int = 0
    warnings: tuple[str, ...] = field(default=())


def cpu_utilization(trace: ResourceTrace, core_count: int = 1) -> CpuUtilization:
    """Per-interval and time-weighted mean CPU utilisation in percent."""
    if core_count < 1:
        raise TraceError("core_count must be positive")
    if len(trace) < 2:
        raise TraceError("need at least two samples for utilisation")
    dt = np.diff(trace.t)
    raw = 100.0 * np.diff(trace.cpu_rt) / (dt * core_count)
    clamped = int(np.count_nonzero((raw < 0) | (raw > 100)))
    if clamped:
        logger.warning("clamped %d utilisation interval(s) outside [0, 100]", clamped)
    pct = np.clip(raw, 0.0, 100.0)
    mean = float(np.sum(pct * dt) / np.sum(dt))
    return CpuUtilization(per_interval=pct, mean_pct=mean, clamped=clamped)


def gpu_utilization(trace: ResourceTrace) -> Optional[float]:
    """Time-weighted mean of the optional GPU utilisation column.

    Each interval carries the utilisation reported at its start, the same
    weighting as :func:`ram_summary`.
    """
    if trace.gpu_util is None:
        return None
    if len(trace) == 1:
        return float(trace.gpu_util[0])
    dt = np.diff(trace.t)
    return float(np.sum(np.clip(trace.gpu_util[:-1], 0, 100) * dt) / np.sum(dt))


def ram_summary(trace: ResourceTrace) -> tuple[float, float]:
    """Peak and time-weighted mean RAM; the last sample carries no weight."""
    if len(trace) == 0:
        raise TraceError("empty trace")
    peak = float(np.max(trace.ram))
    if len(trace) == 1:
        return peak, peak
    dt = np.diff(trace.t)
    return peak, float(np.sum(trace.ram[:-1] * dt) / np.sum(dt))


def summarize(trace: ResourceTrace, core_count: int = 1) -> ResourceSummary:
    util = cpu_utilization(trace, core_count)
    peak, mean = ram_summary(trace)
    warnings = (f"{util.clamped} interval(s) clamped",) if util.clamped else ()
    return ResourceSummary(
        cpu_utilization_pct=util.mean_pct,
        ram_peak=peak,
        ram_mean=mean,
        window=(float(trace.t[0]), float(trace.t[-1])),
        gpu_utilization_pct=gpu_utilization(trace),
        clamped_intervals=util.clamped,
        warnings=warnings,
    )


def baseline_subtract(workload: ResourceSummary, baseline: ResourceSummary) -> ResourceSummary:
    """Subtract idle/background usage from a workload summary, flooring at 0."""
    warnings = list(workload.warnings)

    def sub(name: str, a: Optional[float], b: Optional[float]) -> Optional[float]:
        if a is None or b is None:
            return a
        if b > a:
            warnings.append(f"baseline {name} exceeds workload; floored at 0")
            return 0.0
        return a - b

    ram_peak = sub("ram_peak", workload.ram_peak, baseline.ram_peak)
    ram_mean = sub("ram_mean", workload.ram_mean, baseline.ram_mean)
    if ram_mean > ram_peak:
        # differences of peaks and means need not stay ordered
        ram_mean = ram_peak
    return replace(
        workload,
        cpu_utilization_pct=sub("cpu_utilization_pct", workload.cpu_utilization_pct, baseline.cpu_utilization_pct),
        ram_peak=ram_peak,
        ram_mean=ram_mean,
        gpu_utilization_pct=sub("gpu_utilization_pct", workload.gpu_utilization_pct, baseline.gpu_utilization_pct),
        warnings=tuple(warnings),
    )


def read_resource_trace(source: Union[str, Path, io.TextIOBase], label: str = "workload") -> ResourceTrace:
    """Read a ``t_s,cpu_rt_s,ram_bytes[,gpu_util_pct]`` CSV trace."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TraceError("empty resource trace file") from None
    has_gpu = header == [*TRACE_HEADER, "gpu_util_pct"]
    if list(TRACE_HEADER) != header and not has_gpu:
        raise TraceError(f"unexpected header {header}; expected {','.join(TRACE_HEADER)}[,gpu_util_pct]")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise TraceError(f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from exc
    arr = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return ResourceTrace(
        arr[:, 0], arr[:, 1], arr[:, 2],
        gpu_util=arr[:, 3] if has_gpu else None,
        label=label,
    )


def write_resource_trace(trace: ResourceTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(TRACE_HEADER) + (["gpu_util_pct"] if trace.gpu_util is not None else [])
    writer.writerow(header)
    for i in range(len(trace)):
        row = [repr(float(trace.t[i])), repr(float(trace.cpu_rt[i])), repr(float(trace.ram[i]))]
        if trace.gpu_util is not None:
            row.append(repr(float(trace.gpu_util[i])))
        writer.writerow(row)
    return buf.getvalue()
