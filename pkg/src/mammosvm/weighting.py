"""Feature weights by the principle of maximizing inter-class deviations.

The per-feature deviation is the empirical mean absolute difference over
all cross-class sample pairs; weights are the deviations normalized to
sum 1 (or, in l2 mode, to unit squared sum).
"""
import numpy as np

from .features import require_same_schema


class WeightingError(ValueError):
    """No usable deviation signal (empty class or all-zero deviations)."""


def estimate_deviation(class_a, class_b) -> np.ndarray:
    """Mean |a_p - b_p| over every cross-class pair, per feature p.

    Both argument lists hold FeatureVectors sharing one schema; vectors
    are expected to be normalized so no feature dominates on scale alone.
    """
    class_a, class_b = list(class_a), list(class_b)
    if not class_a or not class_b:
        raise WeightingError("both classes must be non-empty")
    require_same_schema(class_a + class_b)
    a = np.stack([v.values for v in class_a])
    b = np.stack([v.values for v in class_b])
    return np.abs(a[:, np.newaxis, :] - b[np.newaxis, :, :]).mean(axis=(0, 1))


def solve_weights(deviations: np.ndarray, norm: str = "l1") -> np.ndarray:
    """Weights proportional to the deviations.

    norm="l1" divides by the deviation sum (weights sum to 1), the form
    the maximizing-deviations derivation prints. norm="l2" divides by the
    Euclidean norm instead, which is what the unit-squared-sum constraint
    in that derivation actually implies; both rank features identically.
    """
    d = np.asarray(deviations, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("deviation vector must be 1-D and non-empty")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("deviations must be finite and nonnegative")
    if not np.any(d > 0):
        raise WeightingError("all deviations are zero; classes are indistinguishable")
    if norm == "l1":
        return d / d.sum()
    if norm == "l2":
        return d / np.sqrt(np.dot(d, d))
    raise ValueError(f"unknown weight norm {norm!r}")


def write_weights(path, schema, weights) -> None:
    """Plain text, one line per feature: name, weight, full precision."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(schema) != weights.size:
        raise ValueError("schema and weights disagree on length")
    with open(path, "w", encoding="ascii") as fh:
        for name, w in zip(schema, weights):
            fh.write(f"{name} {float(w)!r}\n")


def read_weights(path):
    names, weights = [], []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            names.append(parts[0])
            weights.append(float(parts[1]))
    return tuple(names), np.array(weights)
