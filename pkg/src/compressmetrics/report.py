"""Comparison logs and SVG charts.

Charts are emitted as standalone SVG text built from fixed-precision
numbers, so identical inputs always give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union
from xml.sax.saxutils import escape, quoteattr

from .combined import (
    MetricReport,
    OcsScore,
    RatioBindings,
    RankResult,
    _SIZE_FIELDS,
    _SPEED_FIELDS,
    ocs,
    rank_by_ocs,
    ratio_set_from_dict,
    ratio_set_to_dict,
    write_report,
)

LOG_FORMAT_VERSION = 1
MAX_RADAR_SERIES = 6
CHART_KINDS = ("radar", "bar", "accuracy_vs_speed")
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
RADAR_AXES = ("Performance (P)", "Speedup (S)", "Compression (C)", "Efficiency (E)", "OCS (normalised)")


class ChartError(ValueError):
    pass


class LogFormatError(ValueError):
    pass


# --------------------------------------------------------------------------
# comparison log
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonEntry:
    name: str
    score: OcsScore


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    entries: tuple[ComparisonEntry, ...]
    bindings: RatioBindings
    zeta: float
    input_digests: dict[str, str]
    generated_at: Optional[str] = None
    failures: dict[str, str] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("comparison report needs at least one candidate")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("candidate names must be unique")
        missing = [n for n in [self.baseline, *names] if n not in self.input_digests]
        if missing:
            raise ValueError(f"no input digest for: {', '.join(missing)}")

    def names(self) -> list[str]:
        return [e.name for e in self.entries]


def report_digest(report: MetricReport) -> str:
    return hashlib.sha256(write_report(report).encode("utf-8")).hexdigest()


def build_comparison(
    baseline: MetricReport,
    candidates: Sequence[MetricReport],
    bindings: Optional[RatioBindings] = None,
    zeta: float = 1.0,
    generated_at: Optional[str] = None,
    input_digests: Optional[dict[str, str]] = None,
    config: Optional[dict] = None,
) -> tuple[ComparisonReport, RankResult]:
    """Rank candidates against a baseline and wrap the result for logging."""
    bindings = bindings or RatioBindings()
    names = [c.name for c in candidates]
    if len(set(names)) != len(names):
        raise ValueError("candidate names must be unique")
    ranked = rank_by_ocs(baseline, candidates, bindings, zeta)
    if not ranked.entries:
        raise ValueError("no candidate could be compared: " + "; ".join(ranked.failures.values()))
    digests = {r.name: report_digest(r) for r in [baseline, *candidates]}
    digests.update(input_digests or {})
    report = ComparisonReport(
        baseline=baseline.name,
        entries=tuple(ComparisonEntry(name, score) for name, score in ranked.entries),
        bindings=bindings,
        zeta=zeta,
        input_digests=digests,
        generated_at=generated_at,
        failures=dict(ranked.failures),
        config=dict(config or {}),
    )
    return report, ranked


def comparison_to_dict(report: ComparisonReport) -> dict:
    return {
        "format_version": LOG_FORMAT_VERSION,
        "baseline": report.baseline,
        "zeta": report.zeta,
        "bindings": asdict(report.bindings),
        "generated_at": report.generated_at,
        "input_digests": dict(sorted(report.input_digests.items())),
        "candidates": [
            {"name": e.name, "ocs": e.score.value, "ratios": ratio_set_to_dict(e.score.ratio_set)}
            for e in report.entries
        ],
        "failures": dict(sorted(report.failures.items())),
        "config": report.config,
    }


def write_comparison_log(report: ComparisonReport) -> str:
    """Serialise a comparison as a self-describing JSON document."""
    try:
        return json.dumps(comparison_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
    except (TypeError, ValueError) as exc:
        raise LogFormatError(f"cannot serialise comparison report: {exc}") from exc


def parse_comparison_log(text: Union[str, bytes]) -> ComparisonReport:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"malformed comparison log: {exc}") from exc
    if doc.get("format_version") != LOG_FORMAT_VERSION:
        raise LogFormatError(f"unsupported log format_version {doc.get('format_version')!r}")
    entries = []
    for cand in doc["candidates"]:
        rs = ratio_set_from_dict(cand["ratios"])
        score = ocs(rs)
        if score.value != cand["ocs"]:
            raise LogFormatError(f"{cand['name']}: stored OCS {cand['ocs']} disagrees with its ratios ({score.value})")
        entries.append(ComparisonEntry(cand["name"], score))
    return ComparisonReport(
        baseline=doc["baseline"],
        entries=tuple(entries),
        bindings=RatioBindings(**doc["bindings"]),
        zeta=doc["zeta"],
        input_digests=dict(doc["input_digests"]),
        generated_at=doc.get("generated_at"),
        failures=dict(doc.get("failures", {})),
        config=doc.get("config", {}),
    )


# --------------------------------------------------------------------------
# chart specs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartSpec:
    kind: str
    axes: tuple[str, ...]
    series: tuple[tuple[str, tuple[float, ...]], ...]
    title: str = ""
    size: int = 480
    log_scale: bool = False
    legend: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ChartError(f"unknown chart kind {self.kind!r}")
        for name, values in self.series:
            if len(values) != len(self.axes):
                raise ChartError(f"series {name!r} has {len(values)} values for {len(self.axes)} axes")
            if not all(math.isfinite(v) for v in values):
                raise ChartError(f"series {name!r} has non-finite values")
        if self.legend and len(self.legend) != len(self.series):
            raise ChartError("legend needs one entry per series")

    def legend_text(self, i: int) -> str:
        return self.legend[i] if self.legend else self.series[i][0]


def radar_spec(report: ComparisonReport, names: Optional[Sequence[str]] = None, **style) -> ChartSpec:
    """Radar chart of P, S, C, E and min-max normalised OCS.

    OCS lives on a different scale from the ratios, so its axis is scaled to
    [0, 1] across the plotted models (1 when they all tie); the raw OCS goes
    into the legend.
    """
    entries = [e for e in report.entries if names is None or e.name in names]
    values = [e.score.value for e in entries]
    lo, hi = min(values), max(values)
    series, legend = [], []
    for e in entries:
        r = e.score.ratio_set
        norm = 1.0 if hi == lo else (e.score.value - lo) / (hi - lo)
        series.append((e.name, (r.P, r.S, r.C, r.E, norm)))
        legend.append(f"{e.name} (OCS {e.score.value:.3f})")
    return ChartSpec("radar", RADAR_AXES, tuple(series), legend=tuple(legend), **style)


def bar_spec(report: ComparisonReport, **style) -> ChartSpec:
    series = tuple((e.name, (e.score.value,)) for e in report.entries)
    return ChartSpec("bar", ("OCS",), series, **style)


_AXIS_NAMES = {
    "chats": "CHATS", "macs": "MACs", "latency": "Latency (s)",
    "disk": "Disk size (bytes)", "params": "Parameters", "ram": "RAM (bytes)", "cpu_util": "CPU utilisation (%)",
}


def accuracy_speed_spec(reports: Sequence[MetricReport], bindings: Optional[RatioBindings] = None, **style) -> ChartSpec:
    """Scatter of speed cost vs accuracy, marker area tracking model size."""
    bindings = bindings or RatioBindings()
    series = []
    for rep in reports:
        effective = rep.declares_sparsity and not bindings.dense_only
        vals = []
        for pair in (_SPEED_FIELDS[bindings.speed], ("accuracy", None), _SIZE_FIELDS[bindings.size]):
            dense, eff = pair
            v = getattr(rep, eff) if effective and eff and getattr(rep, eff) is not None else getattr(rep, dense)
            if v is None:
                raise ChartError(f"{rep.name} has no {dense}")
            vals.append(float(v))
        series.append((rep.name, tuple(vals)))
    axes = (_AXIS_NAMES[bindings.speed], f"Accuracy ({bindings.performance})", _AXIS_NAMES[bindings.size])
    return ChartSpec("accuracy_vs_speed", axes, tuple(series), **style)


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------


def _f(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _svg_open(width: int, height: int, title: str) -> list[str]:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text class="title" x="{_f(width / 2)}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')
    return out


def _legend(spec: ChartSpec, x: float, y: float) -> list[str]:
    out = ['<g class="legend">']
    for i in range(len(spec.series)):
        color = PALETTE[i % len(PALETTE)]
        yy = y + 18 * i
        out.append(f'<rect x="{_f(x)}" y="{_f(yy - 10)}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text class="legend-entry" x="{_f(x + 18)}" y="{_f(yy)}">{escape(spec.legend_text(i))}</text>')
    out.append("</g>")
    return out


def _scale(value: float, vmax: float, log: bool) -> float:
    value = max(value, 0.0)
    if log:
        return math.log1p(value) / math.log1p(vmax)
    return value / vmax


def radar_geometry(spec: ChartSpec) -> dict[str, list[tuple[float, float]]]:
    """Vertex coordinates of every series polygon (used by the renderer)."""
    n = len(spec.axes)
    cx = cy = spec.size / 2
    radius = spec.size * 0.35
    vmax = []
    for j in range(n):
        top = max(max(values[j] for _, values in spec.series), 0.0) * 1.1
        vmax.append(top if top > 0 else 1.0)
    out = {}
    for name, values in spec.series:
        pts = []
        for j, v in enumerate(values):
            theta = -math.pi / 2 + 2 * math.pi * j / n
            r = radius * _scale(v, vmax[j], spec.log_scale)
            pts.append((cx + r * math.cos(theta), cy + r * math.sin(theta)))
        out[name] = pts
    return out


def render_radar(spec: ChartSpec) -> str:
    """Radar chart; axes start at 12 o'clock and run clockwise."""
    if spec.kind != "radar":
        raise ChartError("render_radar needs a radar spec")
    if not 3 <= len(spec.axes) <= 8:
        raise ChartError(f"radar needs 3 to 8 axes, got {len(spec.axes)}")
    if not spec.series:
        raise ChartError("radar needs at least one series")
    if len(spec.series) > MAX_RADAR_SERIES:
        raise ChartError(
            f"{len(spec.series)} series exceed the radar limit of {MAX_RADAR_SERIES}; "
            "filter candidates with rank_by_ocs first"
        )
    n = len(spec.axes)
    size = spec.size
    cx = cy = size / 2
    radius = size * 0.35
    width = size + 220
    out = _svg_open(width, size, spec.title)

    out.append('<g class="grid" fill="none" stroke="#cccccc">')
    for frac in (0.25, 0.5, 0.75, 1.0):
        ring = []
        for j in range(n):
            theta = -math.pi / 2 + 2 * math.pi * j / n
            ring.append(f"{_f(cx + frac * radius * math.cos(theta))},{_f(cy + frac * radius * math.sin(theta))}")
        out.append(f'<polygon points="{" ".join(ring)}"/>')
    out.append("</g>")

    out.append('<g class="axes" stroke="#888888">')
    for j, label in enumerate(spec.axes):
        theta = -math.pi / 2 + 2 * math.pi * j / n
        x, y = cx + radius * math.cos(theta), cy + radius * math.sin(theta)
        lx, ly = cx + (radius + 18) * math.cos(theta), cy + (radius + 18) * math.sin(theta)
        anchor = "middle" if abs(math.cos(theta)) < 0.2 else ("start" if math.cos(theta) > 0 else "end")
        out.append(f'<line class="axis" x1="{_f(cx)}" y1="{_f(cy)}" x2="{_f(x)}" y2="{_f(y)}"/>')
        out.append(f'<text class="axis-label" x="{_f(lx)}" y="{_f(ly)}" text-anchor="{anchor}" stroke="none">{escape(label)}</text>')
    out.append("</g>")

    geometry = radar_geometry(spec)
    for i, (name, _) in enumerate(spec.series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in geometry[name])
        out.append(
            f'<polygon class="series" data-series={quoteattr(name)} points="{pts}" '
            f'fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"/>'
        )
    out += _legend(spec, size + 10, 40)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_bar(spec: ChartSpec) -> str:
    """Bar chart sorted by descending value; negative bars hang below zero."""
    if spec.kind != "bar" or len(spec.axes) != 1:
        raise ChartError("render_bar needs a bar spec with a single axis")
    if not spec.series:
        raise ChartError("bar chart needs at least one series")
    items = sorted(((v[0], name) for name, v in spec.series), key=lambda t: (-t[0], t[1]))
    width, height = max(spec.size, 80 * len(items) + 80), spec.size
    top, bottom, left = 40.0, height - 60.0, 60.0
    vmax = max(0.0, max(v for v, _ in items))
    vmin = min(0.0, min(v for v, _ in items))
    span = (vmax - vmin) * 1.1 or 1.0
    vmax_p = vmax + 0.05 * span if vmax > 0 else 0.0
    vmin_p = vmin - 0.05 * span if vmin < 0 else 0.0
    if vmax_p == vmin_p:
        vmax_p = 1.0

    def y_of(v: float) -> float:
        return top + (vmax_p - v) / (vmax_p - vmin_p) * (bottom - top)

    y0 = y_of(0.0)
    slot = (width - left - 20) / len(items)
    out = _svg_open(width, height, spec.title)
    out.append(f'<text class="axis-label" x="16" y="{_f((top + bottom) / 2)}" transform="rotate(-90 16 {_f((top + bottom) / 2)})" text-anchor="middle">{escape(spec.axes[0])}</text>')
    for i, (v, name) in enumerate(items):
        x = left + i * slot + slot * 0.15
        y = y_of(v)
        rect_y, h = (y, y0 - y) if v >= 0 else (y0, y - y0)
        color = PALETTE[i % len(PALETTE)]
        out.append(
            f'<rect class="bar" data-name={quoteattr(name)} data-value="{v!r}" x="{_f(x)}" y="{_f(rect_y)}" '
            f'width="{_f(slot * 0.7)}" height="{_f(h)}" fill="{color}"/>'
        )
        out.append(f'<text class="bar-label" x="{_f(x + slot * 0.35)}" y="{_f(bottom + 20)}" text-anchor="middle">{escape(name)}</text>')
        label_y = rect_y - 4 if v >= 0 else rect_y + h + 14
        out.append(f'<text class="bar-value" x="{_f(x + slot * 0.35)}" y="{_f(label_y)}" text-anchor="middle">{v:.3f}</text>')
    out.append(f'<line class="zero-axis" x1="{_f(left)}" y1="{_f(y0)}" x2="{_f(width - 20)}" y2="{_f(y0)}" stroke="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


MAX_MARKER_RADIUS = 30.0


def render_accuracy_speed(spec: ChartSpec) -> str:
    """Scatter of speed (x) against accuracy (y); marker area proportional to size."""
    if spec.kind != "accuracy_vs_speed" or len(spec.axes) != 3:
        raise ChartError("render_accuracy_speed needs a spec with (speed, accuracy, size) axes")
    if not spec.series:
        raise ChartError("scatter needs at least one series")
    for name, (_, _, size) in spec.series:
        if size <= 0:
            raise ChartError(f"series {name!r} has non-positive size {size}")
    size_px = spec.size
    width, height = size_px + 220, size_px
    left, right, top, bottom = 70.0, size_px - 20.0, 40.0, size_px - 50.0
    xs = [v[0] for _, v in spec.series]
    ys = [v[1] for _, v in spec.series]
    smax = max(v[2] for _, v in spec.series)

    def lin(v, lo, hi, a, b):
        if hi == lo:
            return (a + b) / 2
        return a + (v - lo) / (hi - lo) * (b - a)

    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    xpad, ypad = 0.1 * (xhi - xlo), 0.1 * (yhi - ylo)
    out = _svg_open(width, height, spec.title)
    out.append(f'<line class="x-axis" x1="{_f(left)}" y1="{_f(bottom)}" x2="{_f(right)}" y2="{_f(bottom)}" stroke="black"/>')
    out.append(f'<line class="y-axis" x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(bottom)}" stroke="black"/>')
    out.append(f'<text class="axis-label" x="{_f((left + right) / 2)}" y="{_f(height - 12)}" text-anchor="middle">{escape(spec.axes[0])}</text>')
    out.append(f'<text class="axis-label" x="16" y="{_f((top + bottom) / 2)}" transform="rotate(-90 16 {_f((top + bottom) / 2)})" text-anchor="middle">{escape(spec.axes[1])}</text>')
    for i, (name, (sx, sy, ss)) in enumerate(spec.series):
        color = PALETTE[i % len(PALETTE)]
        cx = lin(sx, xlo - xpad, xhi + xpad, left, right)
        cy = lin(sy, ylo - ypad, yhi + ypad, bottom, top)
        r = MAX_MARKER_RADIUS * math.sqrt(ss / smax)
        out.append(
            f'<circle class="marker" data-name={quoteattr(name)} data-size="{ss!r}" cx="{_f(cx)}" cy="{_f(cy)}" '
            f'r="{r:.6f}" fill="{color}" fill-opacity="0.6" stroke="{color}"/>'
        )
    out += _legend(spec, size_px + 10, 40)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(spec: ChartSpec) -> str:
    return {"radar": render_radar, "bar": render_bar, "accuracy_vs_speed": render_accuracy_speed}[spec.kind](spec)


def write_text_atomic(path: Union[str, Path], text: str) -> None:
    """Write via a temporary sibling file and rename into place."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
