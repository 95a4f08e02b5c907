"""Binary soft-margin SVM trained in the dual by an SMO solver.

Two input routes share one solver: raw feature vectors with a built-in
kernel (linear, polynomial, RBF), or a precomputed kernel matrix in any
of the modes from `kernel`. Labels encode benign = +1, malignant = -1,
so the metric conventions downstream treat benign as the positive class.

The solver picks the working pair by maximal KKT violation, with the
partner maximizing |E_i - E_j|, and tolerates indefinite matrices (the
weighted-diagonal mode can produce them) by stepping to the feasible
endpoint of greater objective whenever the pair curvature is not
positive.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Label
from .features import NormStats
from .kernel import KernelMatrix, KernelMode, TestKernelRow

SV_CUTOFF = 1e-8  # duals below this count as numerically zero


class SvmError(ValueError):
    """Invalid training/prediction input."""


class ConvergenceError(RuntimeError):
    """SMO stopped before reaching the KKT tolerance; best model attached."""

    def __init__(self, message, model=None, kkt_gap=None, passes=None):
        super().__init__(message)
        self.model = model
        self.kkt_gap = kkt_gap
        self.passes = passes


class KernelKind(Enum):
    LINEAR = "linear"
    POLYNOMIAL = "poly"
    RBF = "rbf"
    PRECOMPUTED = "precomputed"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    degree: int = 3
    coef0: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind is KernelKind.POLYNOMIAL and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.kind is KernelKind.RBF and self.gamma <= 0:
            raise ValueError("rbf gamma must be positive")

    @classmethod
    def linear(cls):
        return cls(KernelKind.LINEAR)

    @classmethod
    def poly(cls, degree=3, coef0=0.0, gamma=1.0):
        return cls(KernelKind.POLYNOMIAL, degree=degree, coef0=coef0, gamma=gamma)

    @classmethod
    def rbf(cls, gamma=1.0):
        return cls(KernelKind.RBF, gamma=gamma)

    @classmethod
    def precomputed(cls):
        return cls(KernelKind.PRECOMPUTED)


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("penalty C must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")


@dataclass(frozen=True)
class Prediction:
    label: Label
    decision_value: float


@dataclass(frozen=True)
class SvmModel:
    """Trained dual solution.

    alpha_y holds the signed coefficients y_i * alpha_i of the support
    vectors, indexed into training order by support_indices. For raw
    kernels the support vector features are kept for prediction; for
    precomputed models the test row supplies the kernel values instead.
    """

    kernel: KernelSpec
    support_indices: np.ndarray
    alpha_y: np.ndarray
    bias: float
    n_train: int
    mode: KernelMode | None = None
    weights: np.ndarray | None = None
    support_vectors: np.ndarray | None = None
    schema: tuple | None = None
    norm_stats: NormStats | None = None

    @property
    def support_count(self) -> int:
        return len(self.support_indices)


def _pairwise(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    if spec.kind is KernelKind.LINEAR:
        return x @ z.T
    if spec.kind is KernelKind.POLYNOMIAL:
        return (spec.gamma * (x @ z.T) + spec.coef0) ** spec.degree
    if spec.kind is KernelKind.RBF:
        sq = (
            (x**2).sum(axis=1)[:, np.newaxis]
            + (z**2).sum(axis=1)[np.newaxis, :]
            - 2.0 * (x @ z.T)
        )
        return np.exp(-spec.gamma * np.maximum(sq, 0.0))
    raise SvmError("precomputed kernels take values from a KernelMatrix, not features")


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value of two feature vectors; spec must not be PRECOMPUTED."""
    if spec.kind is KernelKind.PRECOMPUTED:
        raise SvmError("precomputed kernels take values from a KernelMatrix, not features")
    return float(_pairwise(spec, x.values[np.newaxis, :], y.values[np.newaxis, :])[0, 0])


def dual_objective(alpha: np.ndarray, y: np.ndarray, k: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 (alpha y)' K (alpha y)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ k @ ay)


def _argbest(values: np.ndarray, mask: np.ndarray, sign: float, rng) -> int:
    """Index of the extreme value under mask; exact ties break by seeded rng."""
    masked = np.where(mask, sign * values, -np.inf)
    best = masked.max()
    candidates = np.flatnonzero(masked == best)
    if len(candidates) == 1:
        return int(candidates[0])
    return int(candidates[rng.integers(0, len(candidates))])


def _smo(k: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Maximal-violating-pair SMO over a (possibly indefinite) Gram matrix.

    Returns (alpha, bias, converged, passes, kkt_gap). g_i = y_i - u_i is
    the bias each point demands; the optimality window is
    [max over the raise-set, min over the cap-set] and its overshoot is
    the KKT gap.
    """
    length = len(y)
    c, tol = config.C, config.tolerance
    snap = 1e-12 * max(1.0, c)
    rng = np.random.default_rng(config.seed)
    alpha = np.zeros(length)
    u = np.zeros(length)  # u_i = sum_j alpha_j y_j K_ij
    passes = 0
    since_refresh = 0

    def window_sets():
        lower = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))  # demand b >= g_i
        upper = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))  # demand b <= g_i
        return lower, upper

    while passes < config.max_passes:
        passes += 1
        g = y - u
        lower, upper = window_sets()
        p = _argbest(g, lower, +1.0, rng)
        q = _argbest(g, upper, -1.0, rng)
        gap = g[p] - g[q]
        if gap <= tol:
            break

        s = y[p] * y[q]
        # step t changes alpha_q by t and alpha_p by -s*t
        t_lo = -alpha[q]
        t_hi = c - alpha[q]
        if s > 0:
            t_lo = max(t_lo, alpha[p] - c)
            t_hi = min(t_hi, alpha[p])
        else:
            t_lo = max(t_lo, -alpha[p])
            t_hi = min(t_hi, c - alpha[p])

        slope = (1.0 - s) - y[q] * (u[q] - u[p])  # dW/dt at t=0; |slope| == gap
        eta = k[p, p] + k[q, q] - 2.0 * k[p, q]
        if eta > 0.0:
            t = min(max(slope / eta, t_lo), t_hi)
        else:
            # indefinite direction: take the feasible endpoint of greater gain
            gain_lo = slope * t_lo - 0.5 * eta * t_lo * t_lo
            gain_hi = slope * t_hi - 0.5 * eta * t_hi * t_hi
            t = t_lo if gain_lo >= gain_hi else t_hi
        if t == 0.0:
            break  # no feasible movement along the chosen pair

        ap_old, aq_old = alpha[p], alpha[q]
        alpha[q] += t
        alpha[p] -= s * t
        for i in (p, q):
            a = min(max(alpha[i], 0.0), c)
            if a < snap:
                a = 0.0
            elif a > c - snap:
                a = c
            alpha[i] = a
        since_refresh += 1
        if since_refresh >= 128:
            u = k @ (alpha * y)
            since_refresh = 0
        else:
            u = u + (y[q] * (alpha[q] - aq_old)) * k[q] + (y[p] * (alpha[p] - ap_old)) * k[p]

    u = k @ (alpha * y)
    g = y - u
    lower, upper = window_sets()
    window_lo = g[lower].max() if lower.any() else -math.inf
    window_hi = g[upper].min() if upper.any() else math.inf
    gap = window_lo - window_hi
    converged = gap <= tol

    free = (alpha > SV_CUTOFF) & (alpha < c - SV_CUTOFF)
    sv = alpha > SV_CUTOFF
    if free.any():
        bias = float(g[free].mean())
    elif sv.any():
        # keep b inside the optimality window so bound points stay KKT-feasible
        bias = float(
            min(max(g[sv].mean(), min(window_lo, window_hi)), max(window_lo, window_hi))
        )
    else:
        bias = (window_lo + window_hi) / 2.0
    if not math.isfinite(bias):
        bias = 0.0
    return alpha, bias, converged, passes, max(gap, 0.0)


def _labels_from_vectors(vectors) -> np.ndarray:
    y = np.empty(len(vectors))
    for i, v in enumerate(vectors):
        if v.label is Label.BENIGN:
            y[i] = 1.0
        elif v.label is Label.MALIGNANT:
            y[i] = -1.0
        else:
            raise SvmError(f"sample {v.id} has no class label")
    return y


def _labels_from_tokens(tokens) -> np.ndarray:
    y = np.empty(len(tokens))
    for i, tok in enumerate(tokens):
        try:
            val = float(tok)
        except ValueError:
            raise SvmError(f"precomputed label {tok!r} is not numeric") from None
        if val not in (1.0, -1.0):
            raise SvmError(f"precomputed label {tok!r} must be +1 or -1")
        y[i] = val
    return y


def train(data, config: TrainConfig = TrainConfig(), spec: KernelSpec | None = None,
          norm_stats: NormStats | None = None) -> SvmModel:
    """Train on labeled feature vectors or on a precomputed KernelMatrix.

    Postcondition: every point satisfies its KKT condition within
    config.tolerance. Non-convergence raises ConvergenceError with the
    best-effort model attached. Deterministic for a given seed.
    """
    if isinstance(data, KernelMatrix):
        if spec is None:
            spec = KernelSpec.precomputed()
        if spec.kind is not KernelKind.PRECOMPUTED:
            raise SvmError("a KernelMatrix requires a PRECOMPUTED kernel spec")
        y = _labels_from_tokens(data.labels)
        k = data.entries
        asym = np.abs(k - k.T).max() if k.size else 0.0
        if asym > 1e-9 * max(1.0, np.abs(k).max()):
            raise SvmError("precomputed kernel matrix must be symmetric")
        mode, weights, schema, sv_features = data.mode, data.weights, None, None
    else:
        vectors = list(data)
        if not vectors:
            raise SvmError("no training data")
        if spec is None:
            spec = KernelSpec.linear()
        if spec.kind is KernelKind.PRECOMPUTED:
            raise SvmError("PRECOMPUTED training needs a KernelMatrix, not features")
        y = _labels_from_vectors(vectors)
        schema = vectors[0].schema
        for v in vectors:
            if v.schema != schema:
                raise SvmError("training vectors disagree on schema")
        x = np.stack([v.values for v in vectors])
        k = _pairwise(spec, x, x)
        mode, weights, sv_features = None, None, x

    if not ((y > 0).any() and (y < 0).any()):
        raise SvmError("training requires samples from both classes")

    alpha, bias, converged, passes, gap = _smo(k, y, config)
    support = np.flatnonzero(alpha > SV_CUTOFF)
    model = SvmModel(
        kernel=spec,
        support_indices=support,
        alpha_y=alpha[support] * y[support],
        bias=bias,
        n_train=len(y),
        mode=mode,
        weights=None if weights is None else np.asarray(weights, dtype=np.float64),
        support_vectors=None if sv_features is None else sv_features[support],
        schema=schema,
        norm_stats=norm_stats,
    )
    if not converged:
        raise ConvergenceError(
            f"SMO did not reach KKT tolerance {config.tolerance} after {passes} passes "
            f"(gap {gap:.3e})",
            model=model,
            kkt_gap=gap,
            passes=passes,
        )
    return model


def decision_value(model: SvmModel, query) -> float:
    """The argument of the sign in the decision function."""
    if isinstance(query, TestKernelRow):
        row = query.values
    elif isinstance(query, np.ndarray):
        row = query
    else:
        row = None

    if model.kernel.kind is KernelKind.PRECOMPUTED:
        if row is None:
            raise SvmError("a precomputed model predicts from kernel rows, not features")
        if row.shape != (model.n_train,):
            raise SvmError(
                f"kernel row has {row.shape[0] if row.ndim == 1 else 'bad'} values, "
                f"expected {model.n_train}"
            )
        kvals = row[model.support_indices]
    else:
        if row is not None:
            raise SvmError("a feature-kernel model predicts from feature vectors")
        if model.schema is not None and query.schema != model.schema:
            raise SvmError("query schema does not match the model")
        kvals = _pairwise(
            model.kernel, query.values[np.newaxis, :], model.support_vectors
        )[0]
    return float(model.alpha_y @ kvals + model.bias)


def predict(model: SvmModel, query) -> Prediction:
    """Sign of the decision function; an exact zero maps to benign (+1)."""
    value = decision_value(model, query)
    label = Label.BENIGN if value >= 0.0 else Label.MALIGNANT
    return Prediction(label, value)


MODEL_VERSION = "mammosvm model v1"


def save_model(model: SvmModel) -> str:
    """Lossless text rendering; floats use round-trip repr."""
    lines = [MODEL_VERSION]
    lines.append(f"kernel {model.kernel.kind.value}")
    if model.kernel.kind is KernelKind.POLYNOMIAL:
        lines.append(f"degree {model.kernel.degree}")
        lines.append(f"coef0 {model.kernel.coef0!r}")
    if model.kernel.kind in (KernelKind.POLYNOMIAL, KernelKind.RBF):
        lines.append(f"gamma {model.kernel.gamma!r}")
    if model.mode is not None:
        lines.append(f"mode {model.mode.value}")
    lines.append(f"n_train {model.n_train}")
    lines.append(f"bias {model.bias!r}")
    lines.append("labels +1=B -1=M")
    if model.schema is not None:
        lines.append("schema " + " ".join(model.schema))
    if model.weights is not None:
        lines.append(f"weights {len(model.weights)}")
        lines += [repr(float(w)) for w in model.weights]
    if model.norm_stats is not None:
        lines.append(f"norm_stats {len(model.norm_stats.schema)}")
        lines += [
            f"{name} {float(lo)!r} {float(hi)!r}"
            for name, lo, hi in zip(
                model.norm_stats.schema, model.norm_stats.mins, model.norm_stats.maxs
            )
        ]
    lines.append(f"supports {model.support_count}")
    with_features = model.support_vectors is not None
    for i in range(model.support_count):
        row = f"{int(model.support_indices[i])} {float(model.alpha_y[i])!r}"
        if with_features:
            row += " " + " ".join(repr(float(v)) for v in model.support_vectors[i])
        lines.append(row)
    return "\n".join(lines) + "\n"


def load_model(text: str) -> SvmModel:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_VERSION:
        head = lines[0] if lines else ""
        raise SvmError(f"unsupported model version {head!r}")
    fields = {}
    schema = None
    weights = None
    norm_stats = None
    i = 1
    try:
        while i < len(lines):
            key, _, rest = lines[i].partition(" ")
            if key == "schema":
                schema = tuple(rest.split())
            elif key == "weights":
                count = int(rest)
                weights = np.array([float(lines[i + 1 + j]) for j in range(count)])
                i += count
            elif key == "norm_stats":
                count = int(rest)
                names, mins, maxs = [], [], []
                for j in range(count):
                    name, lo, hi = lines[i + 1 + j].split()
                    names.append(name)
                    mins.append(float(lo))
                    maxs.append(float(hi))
                norm_stats = NormStats(tuple(names), np.array(mins), np.array(maxs))
                i += count
            elif key == "supports":
                count = int(rest)
                indices, alpha_y, vecs = [], [], []
                for j in range(count):
                    parts = lines[i + 1 + j].split()
                    indices.append(int(parts[0]))
                    alpha_y.append(float(parts[1]))
                    if len(parts) > 2:
                        vecs.append([float(v) for v in parts[2:]])
                fields["supports"] = (indices, alpha_y, vecs)
                i += count
            else:
                fields[key] = rest
            i += 1
    except (IndexError, ValueError) as exc:
        raise SvmError(f"corrupt model file: {exc}") from None

    for required in ("kernel", "n_train", "bias", "supports"):
        if required not in fields:
            raise SvmError(f"corrupt model file: missing {required} field")
    kind = KernelKind(fields["kernel"])
    spec = KernelSpec(
        kind,
        degree=int(fields.get("degree", 3)),
        coef0=float(fields.get("coef0", 0.0)),
        gamma=float(fields.get("gamma", 1.0)),
    )
    indices, alpha_y, vecs = fields["supports"]
    if vecs and len(vecs) != len(indices):
        raise SvmError("corrupt model file: partial support vector features")
    return SvmModel(
        kernel=spec,
        support_indices=np.array(indices, dtype=int),
        alpha_y=np.array(alpha_y),
        bias=float(fields["bias"]),
        n_train=int(fields["n_train"]),
        mode=KernelMode(fields["mode"]) if "mode" in fields else None,
        weights=weights,
        support_vectors=np.array(vecs) if vecs else None,
        schema=schema,
        norm_stats=norm_stats,
    )
