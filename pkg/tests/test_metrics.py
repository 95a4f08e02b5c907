import numpy as np
import pytest

from mammosvm.dataset import Label
from mammosvm.metrics import (
    ConfusionMatrix,
    MetricsError,
    ReportRow,
    accumulate,
    format_percent,
    format_ratio,
    from_pairs,
    render_csv,
    render_table,
    report,
)

B, M = Label.BENIGN, Label.MALIGNANT


def test_accumulate_definitions():
    cm = ConfusionMatrix()
    assert accumulate(B, B, cm) == ConfusionMatrix(tp=1)
    assert accumulate(M, M, cm) == ConfusionMatrix(tn=1)
    assert accumulate(M, B, cm) == ConfusionMatrix(fp=1)
    assert accumulate(B, M, cm) == ConfusionMatrix(fn=1)


def test_accumulate_rejects_unlabeled():
    with pytest.raises(MetricsError):
        accumulate(Label.NONE, B, ConfusionMatrix())


def test_confusion_matrix_addition_and_total():
    a = ConfusionMatrix(tp=1, tn=2, fp=3, fn=4)
    b = ConfusionMatrix(tp=10, tn=20, fp=30, fn=40)
    assert a + b == ConfusionMatrix(tp=11, tn=22, fp=33, fn=44)
    assert (a + b).total == 110


def test_confusion_matrix_rejects_negative_counts():
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1)


def test_from_pairs():
    pairs = [(B, B), (B, B), (M, M), (M, B), (B, M)]
    cm = from_pairs(pairs)
    assert cm == ConfusionMatrix(tp=2, tn=1, fp=1, fn=1)


def test_report_reference_counts():
    cm = ConfusionMatrix(tp=34, fn=0, tn=23, fp=1)
    rep = report(cm)
    assert rep.sensitivity == 1.0
    assert rep.specificity == pytest.approx(23 / 24)
    assert rep.accuracy == pytest.approx(57 / 58)
    assert format_percent(rep.sensitivity) == "100.00"
    assert format_percent(rep.specificity) == "95.83"
    assert format_percent(rep.accuracy) == "98.28"
    assert rep.misclassified_per_class == (0, 1)


def test_report_perfect_classifier():
    rep = report(ConfusionMatrix(tp=10, tn=10))
    assert rep.sensitivity == 1.0
    assert rep.specificity == 1.0
    assert rep.accuracy == 1.0


def test_report_undefined_ratios_absent():
    rep = report(ConfusionMatrix(tn=5, fp=1))
    assert rep.sensitivity is None
    assert rep.specificity == pytest.approx(5 / 6)
    assert format_percent(rep.sensitivity) == "-"
    assert format_ratio(rep.sensitivity) == "-"


def test_report_empty_matrix_errors():
    with pytest.raises(MetricsError):
        report(ConfusionMatrix())


def test_report_support_vector_count_sources():
    cm = ConfusionMatrix(tp=1, tn=1)
    assert report(cm).support_vector_count == 0
    assert report(cm, model=7).support_vector_count == 7


def test_swapping_positive_class_swaps_sensitivity_specificity():
    rng = np.random.default_rng(71)
    for _ in range(20):
        tp, tn, fp, fn = (int(v) for v in rng.integers(1, 30, size=4))
        direct = report(ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn))
        swapped = report(ConfusionMatrix(tp=tn, tn=tp, fp=fn, fn=fp))
        assert direct.sensitivity == pytest.approx(swapped.specificity)
        assert direct.specificity == pytest.approx(swapped.sensitivity)
        assert direct.accuracy == pytest.approx(swapped.accuracy)


def test_render_table_and_csv():
    cm = ConfusionMatrix(tp=34, fn=0, tn=23, fp=1)
    rows = [ReportRow("texture", "svm-linear", report(cm, model=12))]
    table = render_table(rows)
    assert "texture" in table
    assert "svm-linear" in table
    assert "98.28" in table
    assert "12" in table
    csv = render_csv(rows)
    lines = csv.splitlines()
    assert lines[0].startswith("features,classifier,")
    assert "98.28" in lines[1]
    assert lines[1].endswith(",12")
