"""Confusion-matrix bookkeeping and the three quantitative metrics.

BENIGN is the positive class throughout this package (the source tables
report sensitivity 100 exactly when zero benign samples are
misclassified), which inverts the common medical convention — malignant
findings count toward specificity here.

sensitivity = TP / (TP + FN)
specificity = TN / (TN + FP)
accuracy    = (TP + TN) / (TP + TN + FP + FN)

Ratios with a zero denominator are reported as absent (None), never 0.
"""
from dataclasses import dataclass

from .dataset import Label


class MetricsError(ValueError):
    """Invalid metric input (e.g. empty confusion matrix)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise MetricsError("confusion counts must be non-negative")

    def __add__(self, other):
        return ConfusionMatrix(
            self.tp + other.tp,
            self.tn + other.tn,
            self.fp + other.fp,
            self.fn + other.fn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricReport:
    """Exact ratios (None when the denominator is zero) plus table counts.

    misclassified_per_class = (benign misclassified, malignant
    misclassified) = (fn, fp) under the benign-positive convention.
    """

    sensitivity: float | None
    specificity: float | None
    accuracy: float | None
    support_vector_count: int
    misclassified_per_class: tuple


def accumulate(truth: Label, predicted: Label, cm: ConfusionMatrix) -> ConfusionMatrix:
    """Return cm with the one counter for (truth, predicted) incremented."""
    for lab in (truth, predicted):
        if lab not in (Label.BENIGN, Label.MALIGNANT):
            raise MetricsError(f"labels must be benign or malignant, got {lab}")
    if truth is Label.BENIGN:
        delta = ConfusionMatrix(tp=1) if predicted is Label.BENIGN else ConfusionMatrix(fn=1)
    else:
        delta = ConfusionMatrix(tn=1) if predicted is Label.MALIGNANT else ConfusionMatrix(fp=1)
    return cm + delta


def from_pairs(pairs) -> ConfusionMatrix:
    """Accumulate an iterable of (truth, predicted) label pairs."""
    cm = ConfusionMatrix()
    for truth, predicted in pairs:
        cm = accumulate(truth, predicted, cm)
    return cm


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def report(cm: ConfusionMatrix, model=None) -> MetricReport:
    """Exact metric ratios for cm; support count taken from model if given."""
    if cm.total == 0:
        raise MetricsError("cannot report on an empty confusion matrix")
    if model is None:
        sv_count = 0
    elif isinstance(model, int):
        sv_count = model
    else:
        sv_count = model.support_count
    return MetricReport(
        sensitivity=_ratio(cm.tp, cm.tp + cm.fn),
        specificity=_ratio(cm.tn, cm.tn + cm.fp),
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        support_vector_count=sv_count,
        misclassified_per_class=(cm.fn, cm.fp),
    )


@dataclass(frozen=True)
class ReportRow:
    """One experimental-grid row: which features, which classifier, results."""

    features: str
    classifier: str
    report: MetricReport


def format_percent(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def format_ratio(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


_TABLE_HEADER = (
    "Features",
    "Classifier",
    "Misclassified B",
    "Misclassified M",
    "Accuracy %",
    "Support vectors",
)


def _table_cells(row: ReportRow):
    rep = row.report
    mis_b, mis_m = rep.misclassified_per_class
    return (
        row.features,
        row.classifier,
        str(mis_b),
        str(mis_m),
        format_percent(rep.accuracy),
        str(rep.support_vector_count),
    )


def render_table(rows) -> str:
    """Aligned plain-text table mirroring the source tables' columns."""
    body = [_TABLE_HEADER] + [_table_cells(r) for r in rows]
    widths = [max(len(line[i]) for line in body) for i in range(len(_TABLE_HEADER))]
    out = []
    for n, line in enumerate(body):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


CSV_HEADER = (
    "features,classifier,misclassified_benign,misclassified_malignant,"
    "sensitivity,sensitivity_pct,specificity,specificity_pct,"
    "accuracy,accuracy_pct,support_vectors"
)


def render_csv(rows) -> str:
    """Machine-readable counterpart with raw 4-decimal ratios and percents."""
    lines = [CSV_HEADER]
    for row in rows:
        rep = row.report
        mis_b, mis_m = rep.misclassified_per_class
        lines.append(
            ",".join(
                [
                    row.features,
                    row.classifier,
                    str(mis_b),
                    str(mis_m),
                    format_ratio(rep.sensitivity),
                    format_percent(rep.sensitivity),
                    format_ratio(rep.specificity),
                    format_percent(rep.specificity),
                    format_ratio(rep.accuracy),
                    format_percent(rep.accuracy),
                    str(rep.support_vector_count),
                ]
            )
        )
    return "\n".join(lines) + "\n"
