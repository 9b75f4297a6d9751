"""Offline evaluation metrics for comparing compressed neural networks."""

from .accuracy import (
    Box,
    ClassificationRecord,
    DetectionRecord,
    MatchCounts,
    average_precision,
    iou,
    match_detections,
    mean_average_precision,
    precision_recall_f1,
    top_k_accuracy,
)
from .combined import (
    MetricReport,
    OcsScore,
    RatioBindings,
    RatioSet,
    compute_ratios,
    ocs,
    rank_by_ocs,
)
from .energy import PowerTrace, clip_to_window, integrate_energy
from .model_graph import (
    ModelDescriptor,
    chats,
    count_cost,
    count_params,
    disk_size,
    load_model_descriptor,
    parse_model_descriptor,
)
from .report import (
    ChartSpec,
    ComparisonReport,
    build_comparison,
    parse_comparison_log,
    render_accuracy_speed,
    render_bar,
    render_radar,
    write_comparison_log,
)
from .resources import ResourceTrace, baseline_subtract, cpu_utilization, ram_summary

__version__ = "0.1.0"
