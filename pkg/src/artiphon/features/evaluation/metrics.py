"""
Frame-level classification metrics.

Confusion rows are true classes and columns predictions. Every ratio with a
zero denominator is 0.
"""

from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from artiphon.core.exceptions import IndexOutOfRangeError, ShapeMismatchError

AVG_ROW = "AVG"
AVG_TOLERANCE = 0.005


class ConfusionMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Elementwise sum, e.g. of per-fold or per-worker partial matrices."""
        if other.counts.shape != self.counts.shape:
            raise ShapeMismatchError(f"cannot merge {self.counts.shape} with {other.counts.shape}")
        return ConfusionMatrix(counts=self.counts + other.counts)

    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0


class ClassMetrics(BaseModel):
    """Per-class precision, recall and F1 in class-index order."""

    model_config = ConfigDict(frozen=True)

    precision: List[float]
    recall: List[float]
    f1: List[float]


class MacroMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float
    recall: float
    f1: float


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def confusion(
    preds: np.ndarray,
    labels: np.ndarray,
    mask: Optional[np.ndarray],
    n_classes: int,
) -> ConfusionMatrix:
    """
    Tally unmasked (true, predicted) pairs.

    Args:
        preds: [N] predicted class indices
        labels: [N] true class indices
        mask: [N] True for frames that count; None counts all
        n_classes: C

    Raises:
        IndexOutOfRangeError: An unmasked prediction or label is outside [0, C)
        ShapeMismatchError: Lengths disagree
    """
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.ones(labels.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not (preds.shape == labels.shape == mask.shape) or preds.ndim != 1:
        raise ShapeMismatchError(
            f"preds, labels and mask must be equal-length vectors, got {preds.shape}, {labels.shape}, {mask.shape}"
        )
    p, y = preds[mask], labels[mask]
    for name, values in (("prediction", p), ("label", y)):
        if values.size and (values.min() < 0 or values.max() >= n_classes):
            raise IndexOutOfRangeError(
                f"A {name} lies outside [0, {n_classes})",
                details={"min": int(values.min()), "max": int(values.max())},
            )
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y, p), 1)
    return ConfusionMatrix(counts=counts)


def prf(cm: ConfusionMatrix) -> ClassMetrics:
    counts = cm.counts
    tp = np.diag(counts)
    precision = _ratio(tp, counts.sum(axis=0))
    recall = _ratio(tp, counts.sum(axis=1))
    f1 = _ratio(2 * precision * recall, precision + recall)
    return ClassMetrics(precision=precision.tolist(), recall=recall.tolist(), f1=f1.tolist())


def macro(per_class: ClassMetrics) -> MacroMetrics:
    """Unweighted mean over classes."""
    if not per_class.f1:
        raise ValueError("macro averages need at least one class")
    return MacroMetrics(
        precision=float(np.mean(per_class.precision)),
        recall=float(np.mean(per_class.recall)),
        f1=float(np.mean(per_class.f1)),
    )


def accuracy(preds: np.ndarray, labels: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    mask = np.ones(labels.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    return float((preds[mask] == labels[mask]).sum()) / n if n else 0.0


class MetricsSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    confusion: List[List[int]]
    per_class: ClassMetrics
    macro: MacroMetrics
    accuracy: float
    frames: int


def summarize(preds: np.ndarray, labels: np.ndarray, mask: Optional[np.ndarray], n_classes: int) -> MetricsSummary:
    cm = confusion(preds, labels, mask, n_classes)
    per_class = prf(cm)
    return MetricsSummary(
        confusion=cm.counts.tolist(),
        per_class=per_class,
        macro=macro(per_class),
        accuracy=cm.accuracy(),
        frames=cm.total,
    )


def summary_from_counts(counts: np.ndarray) -> MetricsSummary:
    """Summary of an already tallied (possibly merged) confusion matrix."""
    cm = ConfusionMatrix(counts=np.asarray(counts, dtype=np.int64))
    per_class = prf(cm)
    return MetricsSummary(
        confusion=cm.counts.tolist(),
        per_class=per_class,
        macro=macro(per_class),
        accuracy=cm.accuracy(),
        frames=cm.total,
    )


def majority_baseline(
    labels: np.ndarray,
    mask: Optional[np.ndarray],
    n_classes: int,
    reference_labels: Optional[np.ndarray] = None,
) -> float:
    """
    Macro-F1 of always predicting the most frequent class.

    The majority class is taken from ``reference_labels`` (e.g. the training
    split) when given, else from the unmasked ``labels`` themselves.
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.ones(labels.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    source = labels[mask] if reference_labels is None else np.asarray(reference_labels, dtype=np.int64)
    if source.size == 0:
        return 0.0
    majority = int(np.bincount(source, minlength=n_classes).argmax())
    preds = np.full(labels.shape, majority, dtype=np.int64)
    return macro(prf(confusion(preds, labels, mask, n_classes))).f1


class AvgDeviation(BaseModel):
    """An AVG cell that differs from the mean of its column's class rows."""

    model_config = ConfigDict(frozen=True)

    column: str
    reported: float
    recomputed: float

    @property
    def difference(self) -> float:
        return self.recomputed - self.reported


def avg_row_deviations(table: pd.DataFrame, tolerance: float = AVG_TOLERANCE) -> List[AvgDeviation]:
    """
    Compare each column's AVG row with the mean of its class rows.

    Args:
        table: Class rows plus a final ``AVG`` row, one column per metric
        tolerance: Largest accepted absolute difference

    Returns:
        Deviating cells in column order
    """
    if AVG_ROW not in table.index:
        raise ValueError(f"table has no {AVG_ROW} row")
    classes = table.drop(index=AVG_ROW)
    deviations = []
    for column in table.columns:
        reported = float(table.loc[AVG_ROW, column])
        recomputed = float(classes[column].astype(float).mean())
        if abs(recomputed - reported) > tolerance + 1e-9:
            deviations.append(AvgDeviation(column=str(column), reported=reported, recomputed=recomputed))
    return deviations
