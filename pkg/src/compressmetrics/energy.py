"""Energy from sampled power traces."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

METHODS = ("trapezoidal", "rectangular")
POWER_HEADER = ("t_s", "power_w")
# a gap wider than this share of the window may hide power spikes
COARSE_GAP_FRACTION = 0.10


class PowerTraceError(ValueError):
    pass


@dataclass(frozen=True)
class PowerTrace:
    t: np.ndarray
    power: np.ndarray
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "power", np.asarray(self.power, dtype=float))
        if self.t.shape != self.power.shape or self.t.ndim != 1:
            raise PowerTraceError("time and power columns must be 1-d and equally long")
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise PowerTraceError("timestamps must be strictly increasing")
        if np.any(self.power < 0):
            raise PowerTraceError("power must be non-negative")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, float]], source: str = "") -> "PowerTrace":
        arr = np.asarray(samples, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], source)


@dataclass(frozen=True)
class EnergySummary:
    energy: float  # J
    mean_power: float  # W
    duration: float  # s
    method: str
    max_gap: float  # s
    coarse_sampling: bool = False


def integrate_energy(trace: PowerTrace, method: str = "trapezoidal") -> EnergySummary:
    """Integrate power over time.

    ``"rectangular"`` is the left Riemann sum ``sum(P_i * dt_i)``;
    ``"trapezoidal"`` averages both ends of each interval.
    """
    if method not in METHODS:
        raise PowerTraceError(f"unknown integration method {method!r}; expected one of {METHODS}")
    if len(trace) < 2:
        raise PowerTraceError("need at least two power samples")
    dt = np.diff(trace.t)
    if method == "trapezoidal":
        energy = float(np.sum((trace.power[:-1] + trace.power[1:]) * 0.5 * dt))
    else:
        energy = float(np.sum(trace.power[:-1] * dt))
    duration = float(trace.t[-1] - trace.t[0])
    max_gap = float(np.max(dt))
    coarse = max_gap > COARSE_GAP_FRACTION * duration
    if coarse:
        logger.warning(
            "coarse power sampling: largest gap %.6g s is over %d%% of the %.6g s window",
            max_gap, int(COARSE_GAP_FRACTION * 100), duration,
        )
    return EnergySummary(
        energy=energy,
        mean_power=energy / duration,
        duration=duration,
        method=method,
        max_gap=max_gap,
        coarse_sampling=coarse,
    )


def clip_to_window(trace: PowerTrace, t_start: float, t_end: float) -> PowerTrace:
    """Restrict a trace to ``[t_start, t_end]``.

    Boundary samples are linearly interpolated; a window reaching past the
    trace is cut at the trace ends.
    """
    if not t_start < t_end:
        raise PowerTraceError("window start must precede window end")
    lo = max(t_start, float(trace.t[0]))
    hi = min(t_end, float(trace.t[-1]))
    if not lo < hi:
        raise PowerTraceError(f"window [{t_start}, {t_end}] does not overlap the trace")
    inside = (trace.t > lo) & (trace.t < hi)
    t = np.concatenate(([lo], trace.t[inside], [hi]))
    p = np.interp(t, trace.t, trace.power)
    return PowerTrace(t, p, trace.source)


def net_energy(
    trace: PowerTrace, baseline: Optional[PowerTrace], method: str = "trapezoidal"
) -> tuple[EnergySummary, Optional[float]]:
    """Energy of ``trace`` plus, if a baseline is given, energy above idle power.

    The idle power is the baseline's mean power; the net value is floored at 0.
    """
    summary = integrate_energy(trace, method)
    if baseline is None:
        return summary, None
    idle = integrate_energy(baseline, method).mean_power
    return summary, max(0.0, summary.energy - idle * summary.duration)


def energy_per_inference(summary: EnergySummary, inferences: int) -> float:
    if inferences < 1:
        raise PowerTraceError("inference count must be positive")
    return summary.energy / inferences


def read_power_trace(source: Union[str, Path, io.TextIOBase], label: str = "") -> PowerTrace:
    """Read a ``t_s,power_w`` CSV trace."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise PowerTraceError("empty power trace file") from None
    if header != list(POWER_HEADER):
        raise PowerTraceError(f"unexpected header {header}; expected {','.join(POWER_HEADER)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise PowerTraceError(f"line {lineno}: expected 2 columns, got {len(row)}")
        try:
            rows.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise PowerTraceError(f"line {lineno}: {exc}") from exc
    return PowerTrace.from_samples(rows, source=label or (str(source) if isinstance(source, (str, Path)) else ""))
