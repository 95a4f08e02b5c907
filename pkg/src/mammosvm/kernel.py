"""Precomputed linear kernel matrices and their text serialization.

Training rows serialize as

    <label> 0:i 1:K(x_i,x_1) ... L:K(x_i,x_L)

with every value explicit, zeros included; test rows use a "?" label.
Three construction modes exist:

    PLAIN              K[i][j] = <x_i, x_j>
    WEIGHTED_DIAGONAL  plain off-diagonal, diagonal replaced by the
                       weighted self inner product sum_p w_p x_ip^2
    FULL_WEIGHTED      K[i][j] = sum_p w_p x_ip x_jp (PSD by construction)

Test rows are always plain: weight substitution applies to the training
diagonal only.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Label
from .features import require_same_schema


class KernelFormatError(ValueError):
    """Malformed precomputed-kernel text."""


class KernelMode(Enum):
    PLAIN = "plain"
    WEIGHTED_DIAGONAL = "weighted-diagonal"
    FULL_WEIGHTED = "full-weighted"


LABEL_TOKENS = {Label.BENIGN: "1", Label.MALIGNANT: "-1"}


@dataclass(frozen=True)
class KernelMatrix:
    """Square Gram matrix in precomputed form; labels are file tokens."""

    labels: tuple
    entries: np.ndarray
    mode: KernelMode = KernelMode.PLAIN
    weights: np.ndarray | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("kernel matrix must be square")
        if len(self.labels) != entries.shape[0]:
            raise ValueError("one label per matrix row is required")
        if self.mode is not KernelMode.PLAIN and self.weights is None:
            raise ValueError(f"{self.mode.value} mode requires feature weights")
        object.__setattr__(self, "labels", tuple(str(t) for t in self.labels))
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class TestKernelRow:
    """Kernel values of one query against all L training samples."""

    query_id: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


def linear_kernel(x, y) -> float:
    """Exact dot product of two feature vectors sharing a schema."""
    require_same_schema([x, y])
    return float(np.dot(x.values, y.values))


def gram_matrix(x: np.ndarray, mode: KernelMode, weights=None) -> np.ndarray:
    """Mode-specific Gram matrix of the row vectors in x."""
    x = np.asarray(x, dtype=np.float64)
    if mode is not KernelMode.PLAIN:
        if weights is None:
            raise ValueError(f"{mode.value} mode requires feature weights")
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (x.shape[1],):
            raise ValueError("one weight per feature is required")
    if mode is KernelMode.FULL_WEIGHTED:
        return (x * weights) @ x.T
    k = x @ x.T
    if mode is KernelMode.WEIGHTED_DIAGONAL:
        np.fill_diagonal(k, (x**2) @ weights)
    return k


def build_train_matrix(train, mode: KernelMode = KernelMode.PLAIN, weights=None) -> KernelMatrix:
    """Gram matrix over labeled training vectors, benign=+1, malignant=-1."""
    train = list(train)
    if not train:
        raise ValueError("no training vectors")
    require_same_schema(train)
    x = np.stack([v.values for v in train])
    labels = tuple(LABEL_TOKENS[v.label] for v in train)
    return KernelMatrix(labels, gram_matrix(x, mode, weights), mode, weights)


def build_test_rows(test, train) -> list:
    """Plain linear kernel values of each test vector against the training set.

    No weight substitution happens here regardless of the training mode.
    """
    test, train = list(test), list(train)
    require_same_schema(test + train)
    if not test:
        return []
    xt = np.stack([v.values for v in test])
    xr = np.stack([v.values for v in train])
    values = xt @ xr.T
    return [TestKernelRow(v.id, row) for v, row in zip(test, values)]


def _render(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def _render_row(label: str, index: int, values) -> str:
    cells = [label, f"0:{index}"]
    cells += [f"{j}:{_render(v)}" for j, v in enumerate(values, start=1)]
    return " ".join(cells)


def write_precomputed(matrix: KernelMatrix) -> str:
    """Training-file text; sample index column 0:i runs 1..L in row order."""
    lines = [
        _render_row(label, i, row)
        for i, (label, row) in enumerate(zip(matrix.labels, matrix.entries), start=1)
    ]
    return "\n".join(lines) + "\n"


def write_test_rows(rows) -> str:
    """Test-file text; the label is the "?" placeholder."""
    lines = [_render_row("?", i, row.values) for i, row in enumerate(rows, start=1)]
    return "\n".join(lines) + "\n" if lines else ""


def read_precomputed(text: str):
    """Parse precomputed-kernel text into (labels, values).

    Works for both training matrices and test-row files; values is a
    (rows x L) array. Indices must be the contiguous run 0..L with the
    0: sample-index column first.
    """
    labels, rows = [], []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise KernelFormatError(f"line {lineno}: missing kernel columns")
        values = []
        for expect, token in enumerate(parts[1:]):
            idx_s, sep, val_s = token.partition(":")
            if not sep:
                raise KernelFormatError(f"line {lineno}: malformed token {token!r}")
            try:
                idx = int(idx_s)
            except ValueError:
                raise KernelFormatError(f"line {lineno}: malformed index in {token!r}") from None
            if expect == 0 and idx != 0:
                raise KernelFormatError(f"line {lineno}: missing 0: sample-index column")
            if idx != expect:
                raise KernelFormatError(
                    f"line {lineno}: non-contiguous index {idx}, expected {expect}"
                )
            try:
                value = float(val_s)
            except ValueError:
                raise KernelFormatError(f"line {lineno}: malformed value in {token!r}") from None
            if expect > 0:
                values.append(value)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise KernelFormatError(f"line {lineno}: expected {width} kernel values")
        labels.append(parts[0])
        rows.append(values)
    if not rows:
        raise KernelFormatError("no kernel rows found")
    return labels, np.array(rows, dtype=np.float64)


def read_train_matrix(text: str, mode: KernelMode = KernelMode.PLAIN, weights=None) -> KernelMatrix:
    labels, values = read_precomputed(text)
    if values.shape[0] != values.shape[1]:
        raise KernelFormatError(
            f"training matrix must be square, got {values.shape[0]}x{values.shape[1]}"
        )
    return KernelMatrix(tuple(labels), values, mode, weights)


def read_test_rows(text: str) -> list:
    _, values = read_precomputed(text)
    return [TestKernelRow(str(i), row) for i, row in enumerate(values, start=1)]
