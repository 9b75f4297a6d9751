"""Published reference results bundled with the package.

Three tables of measured metrics (ResNet-18 compression variants on
ImageNet, YOLOv5s variants on COCO, and a set of binarised ImageNet
networks) turned into :class:`MetricReport` objects. They are handy for
exercising the ratio/OCS machinery on realistic numbers. Sizes printed in
MB/GB are converted with decimal prefixes; only ratios of like fields are
meaningful.
"""

from __future__ import annotations

import json
from decimal import Decimal
from importlib import resources
from typing import Optional

from .combined import MetricReport

TABLES = ("resnet18_imagenet", "yolov5s_coco", "binary_nets_imagenet")


def _load() -> dict:
    text = resources.files("compressmetrics").joinpath("data/reference_results.json").read_text(encoding="utf-8")
    return json.loads(text)


def _scaled(value: float, factor: int) -> int:
    return int(Decimal(str(value)) * factor)


def _row_to_report(row: dict, kind: str, table: str) -> MetricReport:
    eff = row.get("effective", {})
    params = _scaled(row["params_m"], 10**6)
    return MetricReport(
        name=row["name"],
        accuracy=float(Decimal(str(row["accuracy_pct"])) / 100),
        accuracy_kind=kind,
        latency_s=float(Decimal(str(row["latency_ms"])) / 1000),
        macs_dense=_scaled(row["macs_g"], 10**9),
        macs_effective=float(_scaled(eff.get("macs_g", row["macs_g"]), 10**9)),
        chats_dense=_scaled(row["chats_g"], 10**9),
        chats_effective=float(_scaled(eff.get("chats_g", row["chats_g"]), 10**9)),
        disk_size_bytes=_scaled(row["disk_mb"], 10**6),
        disk_size_tag="measured",
        disk_size_effective_bytes=_scaled(eff.get("disk_mb", row["disk_mb"]), 10**6),
        params_total=params,
        params_nonzero=_scaled(eff.get("params_m", row["params_m"]), 10**6),
        cpu_utilization_pct=row["cpu_pct"],
        ram_peak_bytes=float(_scaled(row["ram_gb"], 10**9)),
        energy_per_inference_j=row["energy_j"],
        mean_power_w=row["power_w"],
        provenance={"*": {"file": f"reference_results.json#{table}", "sha256": ""}},
    )


def reference_reports(table: str) -> tuple[MetricReport, list[MetricReport]]:
    """Return ``(baseline, candidates)`` for one bundled table."""
    if table not in TABLES:
        raise KeyError(f"unknown table {table!r}; choose from {', '.join(TABLES)}")
    doc = _load()[table]
    reports = [_row_to_report(row, doc["accuracy_kind"], table) for row in doc["rows"]]
    baseline = next(r for r in reports if r.name == doc["baseline"])
    return baseline, [r for r in reports if r is not baseline]


def reference_report(table: str, name: str) -> Optional[MetricReport]:
    baseline, candidates = reference_reports(table)
    for rep in [baseline, *candidates]:
        if rep.name == name:
            return rep
    return None
