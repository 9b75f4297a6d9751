"""Command-line entry point.

Subcommands:

    analyze   one model's inputs -> MetricReport JSON
    compare   baseline + candidate reports -> comparison log and SVG charts
    rank      print candidates ordered by OCS
    validate  lint input files

Exit codes: 0 success, 2 unparseable input, 3 metric precondition failed,
4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import hashlib
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import accuracy, combined, energy, model_graph, report, resources
from .config import CONFIG_ENV, ConfigError, effective_config

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_IO = 4

log = logging.getLogger("compressmetrics")


class PreconditionError(Exception):
    """Inputs parse but do not satisfy a metric's preconditions."""


PARSE_ERRORS = (
    model_graph.DescriptorError,
    accuracy.LogFormatError,
    resources.TraceError,
    energy.PowerTraceError,
    combined.ReportFormatError,
    report.LogFormatError,
    ConfigError,
)
PRECONDITION_ERRORS = (
    PreconditionError,
    model_graph.ShapeError,
    accuracy.AccuracyError,
    combined.RatioError,
    report.ChartError,
)


def _classify(exc: BaseException) -> int:
    if isinstance(exc, model_graph.ShapeError):
        return EXIT_PRECONDITION
    if isinstance(exc, PARSE_ERRORS):
        return EXIT_PARSE
    if isinstance(exc, PRECONDITION_ERRORS):
        return EXIT_PRECONDITION
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_PRECONDITION
    raise exc


_LABELS = {EXIT_PARSE: "input error", EXIT_PRECONDITION: "metric error", EXIT_IO: "I/O error"}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _timestamp(flag: Optional[str]) -> Optional[str]:
    if flag:
        return flag
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return None


def read_latency(path: Path) -> np.ndarray:
    """One latency sample (seconds) per line; an optional ``latency_s`` header."""
    values = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or (lineno == 1 and line == "latency_s"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise accuracy.LogFormatError(f"{path}: line {lineno}: not a number: {line!r}") from None
    if not values:
        raise accuracy.LogFormatError(f"{path}: no latency samples")
    arr = np.asarray(values)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise accuracy.LogFormatError(f"{path}: latency samples must be finite and non-negative")
    return arr


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------


def run_analyze(args: argparse.Namespace) -> int:
    cfg = effective_config(
        {
            "top_k": args.top_k, "iou_profile": args.iou_profile, "ap_method": args.ap_method,
            "integration": args.integration, "ops_basis": args.ops_basis,
            "chats_exponent": args.chats_exponent, "cores": args.cores, "inferences": args.inferences,
        },
        args.config,
    )
    model_path = Path(args.model)
    model = model_graph.parse_model_descriptor(model_path.read_bytes())
    prov: dict[str, dict[str, str]] = {}
    fields: dict = {"name": args.name or model.name}
    warnings: list[str] = []

    def stamp(path: Path, *names: str):
        entry = {"file": str(path), "sha256": _sha256(path)}
        for n in names:
            prov[n] = entry

    params = model_graph.count_params(model)
    cost = model_graph.count_cost(model, basis=cfg["ops_basis"], exponent=float(cfg["chats_exponent"]))
    disk = model_graph.disk_size(model)
    fields.update(
        params_total=params.total_params,
        params_nonzero=params.nonzero_params,
        macs_dense=cost.macs_dense,
        macs_effective=cost.macs_effective,
        chats_dense=cost.chats_dense,
        chats_effective=cost.chats_effective,
        bitwidth_bits=cost.bitwidth_bits,
        disk_size_bytes=disk.bytes,
        disk_size_tag=disk.tag,
        disk_size_effective_bytes=model_graph.disk_size(model, effective=True).bytes,
    )
    stamp(model_path, "params_total", "params_nonzero", "macs_dense", "macs_effective", "chats_dense",
          "chats_effective", "bitwidth_bits", "disk_size_bytes", "disk_size_effective_bytes")

    if args.ground_truth and not args.predictions:
        raise PreconditionError("--ground-truth given without --predictions")
    if args.predictions:
        pred_path = Path(args.predictions)
        kind = accuracy.detect_log_kind(pred_path)
        gt_path = Path(args.ground_truth) if args.ground_truth else None
        if kind == "detection":
            if gt_path is None:
                raise PreconditionError("detection predictions need --ground-truth")
            thresholds = accuracy.IOU_PROFILES.get(cfg["iou_profile"])
            if thresholds is None:
                raise PreconditionError(f"unknown IoU profile {cfg['iou_profile']!r}")
            result = accuracy.mean_average_precision(
                accuracy.read_detection_log(pred_path),
                accuracy.read_detection_log(gt_path, with_confidence=False),
                thresholds,
                method=cfg["ap_method"],
            )
            fields.update(accuracy=result.map, accuracy_kind="map")
            if result.excluded_classes:
                warnings.append(f"classes without ground truth excluded from mAP: {list(result.excluded_classes)}")
        else:
            try:
                records = accuracy.read_classification_log(pred_path, gt_path)
            except accuracy.LogFormatError as exc:
                if gt_path is None and "no ground-truth label" in str(exc):
                    raise PreconditionError(f"predictions carry no labels and --ground-truth is missing ({exc})") from exc
                raise
            k = int(cfg["top_k"])
            fields.update(accuracy=accuracy.top_k_accuracy(records, k), accuracy_kind=f"top{k}")
        stamp(pred_path, "accuracy")
        if gt_path is not None:
            prov["accuracy.ground_truth"] = {"file": str(gt_path), "sha256": _sha256(gt_path)}

    if args.latency:
        lat_path = Path(args.latency)
        lat = read_latency(lat_path)
        fields.update(
            latency_s=float(np.median(lat)),
            latency_mean_s=float(np.mean(lat)),
            latency_p95_s=float(np.percentile(lat, 95)),
        )
        stamp(lat_path, "latency_s", "latency_mean_s", "latency_p95_s")

    inferences = int(cfg["inferences"])
    if args.power:
        power_path = Path(args.power)
        trace = energy.read_power_trace(power_path)
        if args.window:
            trace = energy.clip_to_window(trace, *args.window)
        baseline = energy.read_power_trace(Path(args.baseline_power)) if args.baseline_power else None
        summary, net = energy.net_energy(trace, baseline, cfg["integration"])
        fields.update(
            energy_per_inference_j=energy.energy_per_inference(summary, inferences),
            mean_power_w=summary.mean_power,
        )
        stamp(power_path, "energy_per_inference_j", "mean_power_w")
        if summary.coarse_sampling:
            warnings.append(f"coarse power sampling (max gap {summary.max_gap:.6g} s of {summary.duration:.6g} s)")
        if net is not None:
            fields["energy_net_per_inference_j"] = net / inferences
            stamp(Path(args.baseline_power), "energy_net_per_inference_j")

    if args.resources:
        res_path = Path(args.resources)
        summary = resources.summarize(resources.read_resource_trace(res_path), int(cfg["cores"]))
        fields.update(
            cpu_utilization_pct=summary.cpu_utilization_pct,
            ram_peak_bytes=summary.ram_peak,
            ram_mean_bytes=summary.ram_mean,
            gpu_utilization_pct=summary.gpu_utilization_pct,
        )
        stamp(res_path, "cpu_utilization_pct", "ram_peak_bytes", "ram_mean_bytes")
        if summary.gpu_utilization_pct is not None:
            stamp(res_path, "gpu_utilization_pct")
        if args.baseline_resources:
            base_path = Path(args.baseline_resources)
            base = resources.summarize(resources.read_resource_trace(base_path, "baseline"), int(cfg["cores"]))
            net = resources.baseline_subtract(summary, base)
            fields["cpu_utilization_net_pct"] = net.cpu_utilization_pct
            stamp(base_path, "cpu_utilization_net_pct")
            warnings.extend(net.warnings)
        else:
            warnings.extend(summary.warnings)
    elif args.baseline_resources:
        raise PreconditionError("--baseline-resources given without --resources")

    config_doc = {k: cfg[k] for k in sorted(cfg) if k not in ("hw_profiles",)}
    rep = combined.MetricReport(**fields, provenance=prov, config=config_doc, warnings=tuple(warnings))
    text = combined.write_report(rep)
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / f"{_safe_name(rep.name)}.json"
        inputs = {Path(p).resolve() for p in (args.model, args.predictions, args.ground_truth, args.latency,
                                              args.power, args.baseline_power, args.resources,
                                              args.baseline_resources) if p}
        if out.resolve() in inputs:
            raise PreconditionError(f"output path {out} would overwrite an input")
        report.write_text_atomic(out, text)
        print(out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


# --------------------------------------------------------------------------
# compare / rank
# --------------------------------------------------------------------------


def _load_reports(paths: Sequence[str], baseline_flag: Optional[str]):
    loaded = []
    for p in paths:
        path = Path(p)
        loaded.append((path, combined.parse_report(path.read_bytes())))
    versions = {rep.format_version for _, rep in loaded}
    if len(versions) > 1:
        raise combined.ReportFormatError(f"report format versions differ: {sorted(versions)}")
    names = [rep.name for _, rep in loaded]
    if len(set(names)) != len(names):
        raise PreconditionError(f"report names must be unique, got {names}")
    idx = 0
    if baseline_flag:
        matches = [i for i, (path, rep) in enumerate(loaded) if rep.name == baseline_flag or str(path) == baseline_flag]
        if not matches:
            raise PreconditionError(f"baseline {baseline_flag!r} is not among the reports")
        idx = matches[0]
    baseline_path, baseline = loaded[idx]
    rest = [item for i, item in enumerate(loaded) if i != idx]
    digests = {rep.name: _sha256(path) for path, rep in loaded}
    return baseline, [rep for _, rep in rest], digests


def _ratio_settings(args, cfg):
    bindings = combined.RatioBindings.parse(cfg["bindings"]) if isinstance(cfg["bindings"], str) \
        else combined.RatioBindings(**cfg["bindings"])
    if args.dense_only:
        bindings = dataclasses.replace(bindings, dense_only=True)
    zeta = combined.resolve_zeta(cfg["zeta"], cfg["hw_profile"], cfg["hw_profiles"])
    return bindings, zeta


def run_compare(args: argparse.Namespace) -> int:
    cfg = effective_config(
        {"bindings": args.bindings, "zeta": args.zeta, "hw_profile": args.hw_profile, "top_n": args.top_n},
        args.config,
    )
    if len(args.reports) < 2:
        raise PreconditionError("compare needs a baseline and at least one candidate report")
    baseline, candidates, digests = _load_reports(args.reports, args.baseline)
    bindings, zeta = _ratio_settings(args, cfg)
    config_doc = {k: cfg[k] for k in ("bindings", "zeta", "hw_profile", "top_n")}
    config_doc["zeta_effective"] = zeta
    comp, ranked = report.build_comparison(
        baseline, candidates, bindings, zeta,
        generated_at=_timestamp(args.timestamp),
        input_digests=digests,
        config=config_doc,
    )
    for name, msg in ranked.failures.items():
        log.warning("skipped %s: %s", name, msg)

    # render everything before touching the output directory
    top_n = int(cfg["top_n"])
    radar_names = comp.names()
    if len(radar_names) > report.MAX_RADAR_SERIES:
        radar_names = radar_names[:top_n]
    outputs = {
        "comparison.json": report.write_comparison_log(comp),
        "radar.svg": report.render_radar(report.radar_spec(
            comp, radar_names, title=f"Improvement ratios vs {baseline.name}", log_scale=args.log_scale)),
        "ocs_bar.svg": report.render_bar(report.bar_spec(comp, title="Overall compression success")),
    }
    compared = [baseline] + [c for c in candidates if c.name in comp.names()]
    try:
        spec = report.accuracy_speed_spec(compared, bindings, title="Accuracy vs speed")
        outputs["accuracy_speed.svg"] = report.render_accuracy_speed(spec)
    except report.ChartError as exc:
        log.info("accuracy/speed chart skipped: %s", exc)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        report.write_text_atomic(out_dir / name, text)
    print(report_table(ranked))
    return EXIT_OK


def report_table(ranked: combined.RankResult) -> str:
    lines = [f"{'rank':>4}  {'OCS':>10}  {'P':>8}  {'S':>8}  {'C':>8}  {'E':>8}  name"]
    for i, (name, score) in enumerate(ranked.entries, start=1):
        r = score.ratio_set
        lines.append(f"{i:>4}  {score.value:>10.4f}  {r.P:>8.4f}  {r.S:>8.4f}  {r.C:>8.4f}  {r.E:>8.4f}  {name}")
    for name, msg in ranked.failures.items():
        lines.append(f"   -  {'n/a':>10}  {name}: {msg}")
    return "\n".join(lines)


def run_rank(args: argparse.Namespace) -> int:
    cfg = effective_config({"bindings": args.bindings, "zeta": args.zeta, "hw_profile": args.hw_profile}, args.config)
    if len(args.reports) < 2:
        raise PreconditionError("rank needs a baseline and at least one candidate report")
    baseline, candidates, _ = _load_reports(args.reports, args.baseline)
    bindings, zeta = _ratio_settings(args, cfg)
    ranked = combined.rank_by_ocs(baseline, candidates, bindings, zeta)
    print(report_table(ranked))
    return EXIT_OK if ranked.entries else EXIT_PRECONDITION


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def run_validate(args: argparse.Namespace) -> int:
    checks = []
    if args.model:
        checks.append((args.model, lambda p: model_graph.count_cost(model_graph.load_model_descriptor(p))))
    if args.predictions:
        def check_predictions(p):
            if accuracy.detect_log_kind(p) == "detection":
                accuracy.read_detection_log(p)
            else:
                accuracy.read_classification_log(p, args.ground_truth)
        checks.append((args.predictions, check_predictions))
    if args.ground_truth:
        def check_gt(p):
            if accuracy.detect_log_kind(p) == "detection":
                accuracy.read_detection_log(p, with_confidence=False)
        checks.append((args.ground_truth, check_gt))
    if args.power:
        checks.append((args.power, lambda p: energy.integrate_energy(energy.read_power_trace(p))))
    for p in (args.resources, args.baseline_resources):
        if p:
            checks.append((p, lambda p: resources.cpu_utilization(resources.read_resource_trace(p))))
    if args.latency:
        checks.append((args.latency, lambda p: read_latency(Path(p))))
    for p in args.report or ():
        checks.append((p, combined.load_report))
    if not checks:
        raise PreconditionError("nothing to validate")

    status = EXIT_OK
    for path, check in checks:
        try:
            check(path)
        except Exception as exc:  # noqa: BLE001 - every failure is reported per file
            code = _classify(exc)
            status = max(status, code)
            print(f"FAIL {path}: {exc}")
        else:
            print(f"ok   {path}")
    return status


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compressmetrics",
        description="Evaluate and compare compressed neural networks from offline artifacts.",
        epilog=f"Defaults can be set in a JSON config file named by ${CONFIG_ENV} or --config.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (overrides $%s)" % CONFIG_ENV)

    a = sub.add_parser("analyze", help="compute one model's MetricReport")
    common(a)
    a.add_argument("--model", required=True, help="model descriptor (JSON)")
    a.add_argument("--name", help="report name (default: descriptor name)")
    a.add_argument("--predictions", help="prediction log (JSON lines)")
    a.add_argument("--ground-truth", help="ground-truth log (JSON lines)")
    a.add_argument("--top-k", type=int, help="k for classification accuracy (default 1)")
    a.add_argument("--iou-profile", choices=sorted(accuracy.IOU_PROFILES), help="IoU thresholds for mAP")
    a.add_argument("--ap-method", choices=accuracy.AP_METHODS)
    a.add_argument("--latency", help="latency samples, seconds, one per line")
    a.add_argument("--power", help="power trace CSV (t_s,power_w)")
    a.add_argument("--baseline-power", help="idle power trace CSV for net energy")
    a.add_argument("--window", type=float, nargs=2, metavar=("START", "END"), help="clip power trace to window")
    a.add_argument("--integration", choices=energy.METHODS)
    a.add_argument("--inferences", type=int, help="inferences executed during the power trace")
    a.add_argument("--resources", help="resource trace CSV (t_s,cpu_rt_s,ram_bytes[,gpu_util_pct])")
    a.add_argument("--baseline-resources", help="idle resource trace CSV")
    a.add_argument("--cores", type=int, help="core count for CPU utilisation")
    a.add_argument("--ops-basis", choices=model_graph.OPS_BASES)
    a.add_argument("--chats-exponent", type=float)
    a.add_argument("--out", help="output file or directory (default: stdout)")
    a.set_defaults(func=run_analyze)

    def ratio_opts(p):
        common(p)
        p.add_argument("reports", nargs="+", help="MetricReport files; the first is the baseline")
        p.add_argument("--baseline", help="baseline report name or path")
        p.add_argument("--bindings", help="e.g. performance=top1,speed=chats,size=disk,efficiency=energy")
        p.add_argument("--dense-only", action="store_true", help="ignore pruned (effective) costs")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--zeta", type=float, help="hardware constant for the speedup ratio")
        g.add_argument("--hw-profile", help="named hardware profile supplying zeta")

    c = sub.add_parser("compare", help="compare candidates against a baseline")
    ratio_opts(c)
    c.add_argument("--top-n", type=int, help="models kept on a crowded radar chart (default 4)")
    c.add_argument("--log-scale", action="store_true", help="log-scaled radar axes")
    c.add_argument("--timestamp", help="generation timestamp recorded in the log")
    c.add_argument("--out", required=True, help="output directory")
    c.set_defaults(func=run_compare)

    r = sub.add_parser("rank", help="order candidates by OCS")
    ratio_opts(r)
    r.set_defaults(func=run_rank)

    v = sub.add_parser("validate", help="check input files")
    v.add_argument("--model")
    v.add_argument("--predictions")
    v.add_argument("--ground-truth")
    v.add_argument("--power")
    v.add_argument("--resources")
    v.add_argument("--baseline-resources")
    v.add_argument("--latency")
    v.add_argument("--report", action="append")
    v.set_defaults(func=run_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit-code classes
        code = _classify(exc)
        print(f"compressmetrics: {_LABELS[code]}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
