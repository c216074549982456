"""
Evaluation: frame-level metrics, batched inference and report emission.
"""

from artiphon.features.evaluation.inference import evaluate_examples, predict_examples, predict_logits
from artiphon.features.evaluation.metrics import (
    AVG_ROW,
    AvgDeviation,
    ClassMetrics,
    ConfusionMatrix,
    MacroMetrics,
    MetricsSummary,
    accuracy,
    avg_row_deviations,
    confusion,
    macro,
    majority_baseline,
    prf,
    summarize,
    summary_from_counts,
)
from artiphon.features.evaluation.report import (
    METRICS_FILE,
    FoldResult,
    emit_report,
    find_fold_results,
    read_fold_result,
    read_report_csv,
    reference_deviations,
    reference_scores,
    results_table,
    write_fold_result,
)

__all__ = [
    "evaluate_examples",
    "predict_examples",
    "predict_logits",
    "AVG_ROW",
    "AvgDeviation",
    "ClassMetrics",
    "ConfusionMatrix",
    "MacroMetrics",
    "MetricsSummary",
    "accuracy",
    "avg_row_deviations",
    "confusion",
    "macro",
    "majority_baseline",
    "prf",
    "summarize",
    "summary_from_counts",
    "METRICS_FILE",
    "FoldResult",
    "emit_report",
    "find_fold_results",
    "read_fold_result",
    "read_report_csv",
    "reference_deviations",
    "reference_scores",
    "results_table",
    "write_fold_result",
]
