"""
Per-fold metric files and the cross-fold report.

``eval`` writes one ``metrics.json`` per (fold, mode, dimension). The report
pools those into one CSV per dimension, class rows by
``{mode}.{prec|rec|f1}.{pooled|foldmean}`` columns with the AVG row last,
and SVG bar charts of macro-F1. Each CSV ends with `#` lines listing the
AVG cells of the published scores for that dimension that differ from
their class-row mean by more than rounding.

- pooled: metrics of the summed confusion matrix over folds
- foldmean: per-fold metrics averaged over folds
"""

import io
import json
from collections import defaultdict
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from artiphon.core.exceptions import CorpusIOError, FormatError
from artiphon.core.logging import get_logger
from artiphon.core.utils.validators import validate_choice, validate_non_empty
from artiphon.features.evaluation.metrics import (
    AVG_ROW,
    AvgDeviation,
    MetricsSummary,
    avg_row_deviations,
    summary_from_counts,
)
from artiphon.features.model import Mode
from artiphon.platform.phonology import Dimension, class_names

logger = get_logger(__name__)

METRICS_FILE = "metrics.json"
METRIC_KEYS = (("prec", "precision"), ("rec", "recall"), ("f1", "f1"))
AGGREGATIONS = ("pooled", "foldmean")
REPORT_FORMATS = ("csv", "svg")
SVG_RC = {"svg.hashsalt": "artiphon", "svg.fonttype": "none"}


class FoldResult(BaseModel):
    """Scores of one checkpoint on one split of one fold."""

    model_config = ConfigDict(frozen=True)

    fold: int = Field(ge=0)
    mode: Mode
    dimension: Dimension
    split: str = "test"
    checkpoint: str = ""
    class_names: List[str]
    metrics: MetricsSummary


def write_fold_result(path: Union[str, Path], result: FoldResult) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(result.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"Cannot write {path}", details={"error": str(exc)}) from exc
    return path


def read_fold_result(path: Union[str, Path]) -> FoldResult:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"Cannot read {path}", details={"error": str(exc)}) from exc
    try:
        return FoldResult.model_validate_json(text)
    except PydanticValidationError as exc:
        raise FormatError(f"{path} is not a fold metrics file", details={"errors": exc.errors(include_url=False)}) from exc


def find_fold_results(root: Union[str, Path]) -> List[FoldResult]:
    """Every metrics.json under ``root``, sorted by (dimension, mode, fold)."""
    results = [read_fold_result(p) for p in sorted(Path(root).rglob(METRICS_FILE))]
    return sorted(results, key=lambda r: (r.dimension.value, list(Mode).index(r.mode), r.fold))


def _group(results: Iterable[FoldResult]) -> Dict[Dimension, Dict[Mode, List[FoldResult]]]:
    grouped: Dict[Dimension, Dict[Mode, List[FoldResult]]] = defaultdict(lambda: defaultdict(list))
    for r in results:
        grouped[r.dimension][r.mode].append(r)
    return grouped


def _aggregate(results: Sequence[FoldResult]) -> Dict[str, Dict[str, np.ndarray]]:
    """Per-class metric vectors for both aggregations."""
    pooled = summary_from_counts(np.sum([np.asarray(r.metrics.confusion) for r in results], axis=0))
    out = {"pooled": {}, "foldmean": {}}
    for _, attr in METRIC_KEYS:
        out["pooled"][attr] = np.asarray(getattr(pooled.per_class, attr))
        out["foldmean"][attr] = np.mean([getattr(r.metrics.per_class, attr) for r in results], axis=0)
    return out


def results_table(results: Sequence[FoldResult]) -> pd.DataFrame:
    """
    Class-by-metric table for a single dimension.

    Raises:
        ValueError: Results span several dimensions or are empty
    """
    dims = {r.dimension for r in results}
    if len(dims) != 1:
        raise ValueError(f"results_table needs results of exactly one dimension, got {sorted(d.value for d in dims)}")
    dim = dims.pop()
    names = class_names(dim)
    by_mode = _group(results)[dim]

    columns: Dict[str, List[float]] = {}
    for mode in Mode:
        if mode not in by_mode:
            continue
        agg = _aggregate(by_mode[mode])
        for how in AGGREGATIONS:
            for short, attr in METRIC_KEYS:
                values = agg[how][attr]
                columns[f"{mode.value}.{short}.{how}"] = values.tolist() + [float(values.mean())]

    table = pd.DataFrame(columns, index=list(names) + [AVG_ROW])
    table.index.name = "class"
    return table


@lru_cache(maxsize=None)
def _reference_text(dimension: Dimension) -> str:
    return (
        resources.files("artiphon.features.evaluation")
        .joinpath(f"data/reference_{dimension.value}.csv")
        .read_text(encoding="utf-8")
    )


def reference_scores(dimension: Dimension) -> pd.DataFrame:
    """
    Published per-class scores for ``dimension``.

    Two-decimal precision, recall and F1 per mode as ``{mode}.{prec|rec|f1}``
    columns, class rows in label order and the reported AVG row last.
    """
    return pd.read_csv(io.StringIO(_reference_text(dimension)), index_col=0)


def reference_deviations(dimension: Dimension) -> List[AvgDeviation]:
    """AVG cells of the published scores that are not their column's class mean."""
    return avg_row_deviations(reference_scores(dimension))


def _write_csv(path: Path, table: pd.DataFrame, deviations: List[AvgDeviation]) -> None:
    buf = io.StringIO()
    table.to_csv(buf, lineterminator="\n")
    for d in deviations:
        buf.write(
            f"# reference_avg_deviation column={d.column} reported={d.reported:.2f} recomputed={d.recomputed:.4f}\n"
        )
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_report_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Parse a report CSV, skipping deviation footer lines."""
    try:
        return pd.read_csv(path, index_col=0, comment="#")
    except (OSError, pd.errors.ParserError) as exc:
        raise CorpusIOError(f"Cannot read report {path}", details={"error": str(exc)}) from exc


def _bar_chart(path: Path, groups: List[str], series: Dict[str, List[float]], title: str) -> None:
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(6.4, 3.6))
        ax = fig.add_subplot(1, 1, 1)
        x = np.arange(len(groups))
        width = 0.8 / max(len(series), 1)
        for i, (label, values) in enumerate(series.items()):
            bars = ax.bar(x + (i - (len(series) - 1) / 2) * width, values, width, label=label)
            ax.bar_label(bars, fmt="%.2f", fontsize=7)
        ax.set_xticks(x)
        ax.set_xticklabels(groups)
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("macro F1")
        ax.set_title(title)
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})


def emit_report(
    results: Sequence[FoldResult],
    out_dir: Union[str, Path],
    formats: Sequence[str] = ("csv", "svg"),
) -> List[Path]:
    """
    Write report files for every dimension present in ``results``.

    Files: ``{dimension}.csv`` and ``{dimension}.svg`` per dimension, plus
    ``summary.svg`` comparing dimensions when there is more than one.
    Identical inputs produce identical bytes.

    Raises:
        CorpusIOError: Output cannot be written
        ValidationError: No results, or an unknown format
    """
    for fmt in formats:
        validate_choice(fmt, REPORT_FORMATS, "report format")
    validate_non_empty(list(results), "results")

    out_dir = Path(out_dir)
    written: List[Path] = []
    grouped = _group(results)
    dims = sorted(grouped, key=lambda d: list(Dimension).index(d))
    summary: Dict[str, List[Tuple[str, float]]] = {}

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for dim in dims:
            dim_results = [r for mode_results in grouped[dim].values() for r in mode_results]
            table = results_table(dim_results)
            modes = [m for m in Mode if m in grouped[dim]]
            f1 = {m.value: float(table.loc[AVG_ROW, f"{m.value}.f1.pooled"]) for m in modes}
            summary[dim.value] = list(f1.items())

            if "csv" in formats:
                path = out_dir / f"{dim.value}.csv"
                deviations = reference_deviations(dim)
                _write_csv(path, table, deviations)
                if deviations:
                    logger.info(
                        "reference_avg_deviations", dimension=dim.value, columns=[d.column for d in deviations]
                    )
                written.append(path)
            if "svg" in formats:
                path = out_dir / f"{dim.value}.svg"
                _bar_chart(path, list(f1), {"pooled": list(f1.values())}, f"{dim.value}: macro F1 by mode")
                written.append(path)

        if "svg" in formats and len(dims) > 1:
            modes = [m.value for m in Mode if any(m in grouped[d] for d in dims)]
            series = {
                mode: [dict(summary[d.value]).get(mode, 0.0) for d in dims] for mode in modes
            }
            path = out_dir / "summary.svg"
            _bar_chart(path, [d.value for d in dims], series, "Average macro F1 by task")
            written.append(path)
    except OSError as exc:
        raise CorpusIOError(f"Cannot write report to {out_dir}", details={"error": str(exc)}) from exc

    logger.info("report_emitted", out_dir=str(out_dir), files=[p.name for p in written], results=len(results))
    return written
