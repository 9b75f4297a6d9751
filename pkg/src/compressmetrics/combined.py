"""Improvement ratios between a baseline and a compressed model, and OCS.

The four ratios are

* performance ``P = candidate accuracy / baseline accuracy``
* speedup ``S = zeta * baseline speed cost / candidate speed cost``
* compression ``C = baseline size / candidate size``
* efficiency ``E = baseline energy / candidate energy``

and the overall compression success is ``P**2 * ((P-1)+(S-1)+(C-1)+(E-1))``.
Which report field feeds each ratio is chosen by :class:`RatioBindings` and
is recorded alongside every result.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Sequence, Union

FORMAT_VERSION = 1

SPEED_SOURCES = ("chats", "latency", "macs")
SIZE_SOURCES = ("disk", "params", "ram", "cpu_util")
EFFICIENCY_SOURCES = ("energy", "power")

DEFAULT_HW_PROFILES = {"generic": 1.0, "turing": 4.0}


class RatioError(ValueError):
    """A ratio cannot be formed; ``field`` names the offending report field."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class ReportFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    """All metrics measured or derived for one model.

    Absent metrics are ``None``. Accuracy is a fraction in [0, 1]; sizes are
    bytes, times seconds, energy joules per inference.
    """

    name: str
    accuracy: Optional[float] = None
    accuracy_kind: Optional[str] = None
    latency_s: Optional[float] = None
    latency_mean_s: Optional[float] = None
    latency_p95_s: Optional[float] = None
    macs_dense: Optional[int] = None
    macs_effective: Optional[float] = None
    chats_dense: Optional[Union[int, float]] = None
    chats_effective: Optional[float] = None
    bitwidth_bits: Optional[float] = None
    disk_size_bytes: Optional[int] = None
    disk_size_tag: Optional[str] = None
    disk_size_effective_bytes: Optional[int] = None
    params_total: Optional[int] = None
    params_nonzero: Optional[int] = None
    cpu_utilization_pct: Optional[float] = None
    cpu_utilization_net_pct: Optional[float] = None
    gpu_utilization_pct: Optional[float] = None
    ram_peak_bytes: Optional[float] = None
    ram_mean_bytes: Optional[float] = None
    energy_per_inference_j: Optional[float] = None
    energy_net_per_inference_j: Optional[float] = None
    mean_power_w: Optional[float] = None
    provenance: dict[str, dict[str, str]] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or f.name == "format_version":
                continue
            if not math.isfinite(value) or value < 0:
                raise ReportFormatError(f"{self.name}: {f.name} must be finite and >= 0, got {value}")
        if self.accuracy is not None:
            if self.accuracy > 1:
                raise ReportFormatError(f"{self.name}: accuracy must be a fraction in [0, 1]")
            if not self.accuracy_kind:
                raise ReportFormatError(f"{self.name}: accuracy given without accuracy_kind")

    @property
    def sparsity(self) -> Optional[float]:
        if not self.params_total or self.params_nonzero is None:
            return None
        return 1 - self.params_nonzero / self.params_total

    @property
    def declares_sparsity(self) -> bool:
        return (
            self.params_total is not None
            and self.params_nonzero is not None
            and self.params_nonzero < self.params_total
        )

    def populated(self) -> list[str]:
        skip = {"name", "provenance", "config", "warnings", "format_version", "disk_size_tag", "accuracy_kind"}
        return [f.name for f in fields(self) if f.name not in skip and getattr(self, f.name) is not None]


def report_to_dict(report: MetricReport) -> dict:
    doc = asdict(report)
    doc["warnings"] = list(report.warnings)
    return doc


def report_from_dict(doc: Any) -> MetricReport:
    if not isinstance(doc, dict):
        raise ReportFormatError("metric report must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ReportFormatError(f"unsupported report format_version {version!r} (expected {FORMAT_VERSION})")
    known = {f.name for f in fields(MetricReport)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ReportFormatError(f"unknown report field(s): {', '.join(unknown)}")
    if "name" not in doc:
        raise ReportFormatError("report has no name")
    doc = dict(doc)
    doc["warnings"] = tuple(doc.get("warnings", ()))
    return MetricReport(**doc)


def write_report(report: MetricReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def parse_report(text: Union[str, bytes]) -> MetricReport:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"malformed metric report: {exc}") from exc
    return report_from_dict(doc)


def load_report(path: Union[str, Path]) -> MetricReport:
    return parse_report(Path(path).read_bytes())


# --------------------------------------------------------------------------
# ratios
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioBindings:
    performance: str = "top1"
    speed: str = "chats"
    size: str = "disk"
    efficiency: str = "energy"
    dense_only: bool = False

    def __post_init__(self):
        if self.speed not in SPEED_SOURCES:
            raise ValueError(f"speed binding must be one of {SPEED_SOURCES}, got {self.speed!r}")
        if self.size not in SIZE_SOURCES:
            raise ValueError(f"size binding must be one of {SIZE_SOURCES}, got {self.size!r}")
        if self.efficiency not in EFFICIENCY_SOURCES:
            raise ValueError(f"efficiency binding must be one of {EFFICIENCY_SOURCES}, got {self.efficiency!r}")

    @classmethod
    def parse(cls, text: str) -> "RatioBindings":
        """Parse ``"performance=map,speed=latency"``; missing keys keep defaults."""
        kwargs: dict[str, Any] = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, sep, value = part.partition("=")
            key = key.strip()
            if not sep or key not in {"performance", "speed", "size", "efficiency", "dense_only"}:
                raise ValueError(f"bad binding {part!r}")
            kwargs[key] = value.strip().lower() in {"1", "true", "yes"} if key == "dense_only" else value.strip()
        return cls(**kwargs)


_SPEED_FIELDS = {
    "chats": ("chats_dense", "chats_effective"),
    "macs": ("macs_dense", "macs_effective"),
    "latency": ("latency_s", None),
}
_SIZE_FIELDS = {
    "disk": ("disk_size_bytes", "disk_size_effective_bytes"),
    "params": ("params_total", "params_nonzero"),
    "ram": ("ram_peak_bytes", None),
    "cpu_util": ("cpu_utilization_pct", None),
}
_EFFICIENCY_FIELDS = {
    "energy": ("energy_per_inference_j", None),
    "power": ("mean_power_w", None),
}


@dataclass(frozen=True)
class RatioSet:
    P: float
    S: float
    C: float
    E: float
    zeta: float
    bindings: RatioBindings
    fields_used: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("P", "S", "C", "E", "zeta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise RatioError(f"ratio {name} is not finite: {value}")
        # P may reach 0 when the candidate's accuracy collapses
        if self.P < 0 or min(self.S, self.C, self.E, self.zeta) <= 0:
            raise RatioError(f"ratios must be positive: P={self.P} S={self.S} C={self.C} E={self.E} zeta={self.zeta}")

    def with_zeta(self, zeta: float) -> "RatioSet":
        """Rescale the speedup to another hardware constant."""
        return replace(self, S=self.S * (zeta / self.zeta), zeta=zeta)


@dataclass(frozen=True)
class OcsScore:
    value: float
    ratio_set: RatioSet


def _pick(report: MetricReport, pair: tuple[str, Optional[str]], effective: bool) -> tuple[str, Any]:
    dense, eff = pair
    if effective and eff is not None and getattr(report, eff) is not None:
        return eff, getattr(report, eff)
    return dense, getattr(report, dense)


def _ratio(numerator: MetricReport, denominator: MetricReport, pair, effective: bool, role: str) -> tuple[float, str]:
    num_field, num = _pick(numerator, pair, effective)
    den_field, den = _pick(denominator, pair, effective)
    if num is None:
        raise RatioError(f"{role}: {numerator.name} has no {num_field}", num_field)
    if den is None:
        raise RatioError(f"{role}: {denominator.name} has no {den_field}", den_field)
    if den <= 0:
        raise RatioError(f"{role}: {den_field} of {denominator.name} is zero", den_field)
    if num <= 0:
        raise RatioError(f"{role}: {num_field} of {numerator.name} is zero", num_field)
    return num / den, den_field


def compute_ratios(
    baseline: MetricReport,
    candidate: MetricReport,
    bindings: Optional[RatioBindings] = None,
    zeta: float = 1.0,
) -> RatioSet:
    """Improvement ratios of ``candidate`` relative to ``baseline``.

    Pruned-cost fields (effective MACs/CHATS, nonzero parameters, pruned disk
    estimate) are used when the candidate declares sparsity, unless
    ``bindings.dense_only`` is set.
    """
    bindings = bindings or RatioBindings()
    if not zeta > 0 or not math.isfinite(zeta):
        raise RatioError(f"zeta must be a positive finite number, got {zeta}")

    for rep in (baseline, candidate):
        if rep.accuracy is None:
            raise RatioError(f"performance: {rep.name} has no accuracy", "accuracy")
        if rep.accuracy_kind != bindings.performance:
            raise RatioError(
                f"performance: {rep.name} reports {rep.accuracy_kind} accuracy, "
                f"bindings require {bindings.performance}",
                "accuracy_kind",
            )
    if baseline.accuracy <= 0:
        raise RatioError(f"performance: accuracy of {baseline.name} is zero", "accuracy")
    P = candidate.accuracy / baseline.accuracy

    effective = candidate.declares_sparsity and not bindings.dense_only
    S, s_field = _ratio(baseline, candidate, _SPEED_FIELDS[bindings.speed], effective, "speed")
    C, c_field = _ratio(baseline, candidate, _SIZE_FIELDS[bindings.size], effective, "size")
    E, e_field = _ratio(baseline, candidate, _EFFICIENCY_FIELDS[bindings.efficiency], effective, "efficiency")
    return RatioSet(
        P=P,
        S=zeta * S,
        C=C,
        E=E,
        zeta=zeta,
        bindings=bindings,
        fields_used={"P": "accuracy", "S": s_field, "C": c_field, "E": e_field},
    )


def ocs_value(P: float, S: float, C: float, E: float) -> float:
    return P ** 2 * ((P - 1) + (S - 1) + (C - 1) + (E - 1))


def ocs(r: RatioSet) -> OcsScore:
    """Overall compression success: positive for net improvement."""
    return OcsScore(value=ocs_value(r.P, r.S, r.C, r.E), ratio_set=r)


@dataclass(frozen=True)
class RankResult:
    entries: tuple[tuple[str, OcsScore], ...]
    failures: dict[str, str] = field(default_factory=dict)

    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


def rank_by_ocs(
    baseline: MetricReport,
    candidates: Sequence[MetricReport],
    bindings: Optional[RatioBindings] = None,
    zeta: float = 1.0,
) -> RankResult:
    """Candidates by descending OCS; ties by higher P, then name.

    Candidates whose ratios cannot be formed are listed in ``failures``
    instead of aborting the batch.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    scored = []
    failures = {}
    for cand in candidates:
        try:
            scored.append((cand.name, ocs(compute_ratios(baseline, cand, bindings, zeta))))
        except RatioError as exc:
            failures[cand.name] = str(exc)
    scored.sort(key=lambda item: (-item[1].value, -item[1].ratio_set.P, item[0]))
    return RankResult(entries=tuple(scored), failures=dict(sorted(failures.items())))


def resolve_zeta(zeta: Optional[float], hw_profile: Optional[str], profiles: Optional[dict] = None) -> float:
    """Explicit ``zeta`` wins over a named hardware profile; default 1."""
    if zeta is not None:
        if not zeta > 0:
            raise ValueError(f"zeta must be positive, got {zeta}")
        return float(zeta)
    if hw_profile is None:
        return 1.0
    table = {**DEFAULT_HW_PROFILES, **(profiles or {})}
    if hw_profile not in table:
        raise ValueError(f"unknown hardware profile {hw_profile!r}; known: {', '.join(sorted(table))}")
    return float(table[hw_profile])


def ratio_set_to_dict(r: RatioSet) -> dict:
    return {
        "P": r.P, "S": r.S, "C": r.C, "E": r.E, "zeta": r.zeta,
        "bindings": asdict(r.bindings),
        "fields_used": dict(r.fields_used),
    }


def ratio_set_from_dict(doc: dict) -> RatioSet:
    return RatioSet(
        P=doc["P"], S=doc["S"], C=doc["C"], E=doc["E"], zeta=doc["zeta"],
        bindings=RatioBindings(**doc["bindings"]),
        fields_used=dict(doc.get("fields_used", {})),
    )
