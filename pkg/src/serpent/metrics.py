"""Confusion matrix, accuracy, per-class precision/recall/F1, and report
rendering in the classic fixed-width classification-report layout."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from serpent.dataset import EMOTIONS
from serpent.errors import EmptyMatrix, InvalidLabel, LengthMismatch


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassReport:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: tuple[ClassReport, ...]
    accuracy: float
    macro: tuple[float, float, float]
    weighted: tuple[float, float, float]
    total: int
    degenerate_classes: tuple[str, ...]  # classes where a zero denominator forced a 0


def confusion_matrix(y_true, y_pred, labels: tuple[str, ...] = EMOTIONS) -> ConfusionMatrix:
    """Tally class codes (ints) or label names into an n x n count matrix."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true vs {len(y_pred)} predicted labels")
    if len(y_true) == 0:
        raise LengthMismatch("need at least one sample")
    index = {name: i for i, name in enumerate(labels)}

    def code(value):
        if isinstance(value, str):
            if value not in index:
                raise InvalidLabel(f"unknown label {value!r}")
            return index[value]
        c = int(value)
        if not 0 <= c < len(labels):
            raise InvalidLabel(f"label code {c} out of range for {len(labels)} classes")
        return c

    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        counts[code(t), code(p)] += 1
    return ConfusionMatrix(counts, tuple(labels))


def accuracy(cm: ConfusionMatrix) -> float:
    """Multiclass accuracy: trace / total."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix holds no samples")
    return float(np.trace(cm.counts)) / cm.total


def binary_accuracy(tp: int, tn: int, fp: int, fn: int) -> float:
    """Two-class accuracy written as (TP + TN) / (TP + TN + FN + FP)."""
    denom = tp + tn + fn + fp
    if denom == 0:
        raise EmptyMatrix("no samples")
    return (tp + tn) / denom


def precision_recall_f1(cm: ConfusionMatrix) -> ClassificationReport:
    """Per-class metrics plus macro and support-weighted averages.

    A zero denominator yields 0 for that metric; affected classes are listed
    in degenerate_classes.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix holds no samples")
    counts = cm.counts
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    diag = np.diag(counts)

    rows = []
    degenerate = []
    for i, label in enumerate(cm.labels):
        flagged = False
        if col_sums[i] > 0:
            precision = diag[i] / col_sums[i]
        else:
            precision, flagged = 0.0, True
        if row_sums[i] > 0:
            recall = diag[i] / row_sums[i]
        else:
            recall, flagged = 0.0, True
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1, flagged = 0.0, True
        if flagged:
            degenerate.append(label)
        rows.append(ClassReport(label, float(precision), float(recall), float(f1), int(row_sums[i])))

    n = len(cm.labels)
    macro = (
        sum(r.precision for r in rows) / n,
        sum(r.recall for r in rows) / n,
        sum(r.f1 for r in rows) / n,
    )
    weighted = (
        sum(r.precision * r.support for r in rows) / cm.total,
        sum(r.recall * r.support for r in rows) / cm.total,
        sum(r.f1 * r.support for r in rows) / cm.total,
    )
    return ClassificationReport(
        per_class=tuple(rows),
        accuracy=accuracy(cm),
        macro=macro,
        weighted=weighted,
        total=cm.total,
        degenerate_classes=tuple(degenerate),
    )


def render_report(report: ClassificationReport) -> str:
    """Fixed-width text table: per-class rows, then accuracy/macro/weighted."""
    width = max(
        max(len(r.label) for r in report.per_class), len("weighted avg")
    )
    out = io.StringIO()
    out.write(
        f"{'':>{width}}  {'precision':>9} {'recall':>9} {'f1-score':>9} {'support':>9}\n\n"
    )
    for r in report.per_class:
        out.write(
            f"{r.label:>{width}}  {r.precision:>9.2f} {r.recall:>9.2f}"
            f" {r.f1:>9.2f} {r.support:>9d}\n"
        )
    out.write(f"\n{'accuracy':>{width}}  {'':>9} {'':>9} {report.accuracy:>9.2f} {report.total:>9d}\n")
    mp, mr, mf = report.macro
    out.write(f"{'macro avg':>{width}}  {mp:>9.2f} {mr:>9.2f} {mf:>9.2f} {report.total:>9d}\n")
    wp, wr, wf = report.weighted
    out.write(f"{'weighted avg':>{width}}  {wp:>9.2f} {wr:>9.2f} {wf:>9.2f} {report.total:>9d}\n")
    return out.getvalue()


def report_to_csv(report: ClassificationReport) -> str:
    lines = ["label,precision,recall,f1,support"]
    for r in report.per_class:
        lines.append(f"{r.label},{r.precision:.9g},{r.recall:.9g},{r.f1:.9g},{r.support}")
    lines.append(f"accuracy,,,{report.accuracy:.9g},{report.total}")
    mp, mr, mf = report.macro
    lines.append(f"macro avg,{mp:.9g},{mr:.9g},{mf:.9g},{report.total}")
    wp, wr, wf = report.weighted
    lines.append(f"weighted avg,{wp:.9g},{wr:.9g},{wf:.9g},{report.total}")
    return "\n".join(lines) + "\n"


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    """Counts with a header row and leading column of label names."""
    lines = ["true\\pred," + ",".join(cm.labels)]
    for label, row in zip(cm.labels, cm.counts):
        lines.append(label + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"
