"""Feature extraction: histogram statistics, Gabor texture, clinical codes.

The full schema is 29 features in three groups:
  statistical (8)  moments and histogram measures over intensities
                   rescaled to [0, 1]
  texture (12)     mean and variance of each Gabor magnitude response,
                   filters in (scale, orientation) lexicographic order
  clinical (9)     one-hot tissue (3) and one-hot abnormality (6)
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import convolve_complex_raw
from .dataset import Abnormality, GrayImage, Label, SampleRecord, Tissue


class SchemaError(ValueError):
    """Feature vectors or stats disagree on the feature schema."""


STATISTICAL_NAMES = (
    "stat_mean",
    "stat_variance",
    "stat_skewness",
    "stat_uniformity",
    "stat_entropy",
    "stat_kurtosis",
    "stat_contrast",
    "stat_smoothness",
)

CLINICAL_TISSUES = (Tissue.FATTY, Tissue.FATTY_GLANDULAR, Tissue.DENSE_GLANDULAR)
CLINICAL_ABNORMALITIES = (
    Abnormality.CALC,
    Abnormality.CIRC,
    Abnormality.SPIC,
    Abnormality.MISC,
    Abnormality.ARCH,
    Abnormality.ASYM,
)
CLINICAL_NAMES = tuple(f"tissue_{t.value}" for t in CLINICAL_TISSUES) + tuple(
    f"abnorm_{a.value}" for a in CLINICAL_ABNORMALITIES
)

FEATURE_GROUPS = ("statistical", "texture", "clinical")


@dataclass(frozen=True)
class Histogram:
    """Probabilities over the 256 intensity levels; sums to 1."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (256,):
            raise ValueError("histogram must cover exactly 256 levels")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        p = np.ascontiguousarray(p)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)


@dataclass(frozen=True)
class GaborBankSpec:
    """Filter bank: per-scale factor s = alpha**(-omega), carrier pi*s.

    The default bank is three scales and two orientations 30 degrees
    apart, six filters total. `trial_preset` gives the single filter
    (omega=2, theta=5pi/3) sometimes useful as a comparison point.
    """

    alpha: float = 2.0 ** -0.5
    scales: tuple = (0, 1, 2)
    orientations: tuple = (0.0, math.pi / 6)
    envelope_cutoff: float = 1e-3

    def __post_init__(self):
        if not self.scales or not self.orientations:
            raise ValueError("bank needs at least one scale and one orientation")
        if self.alpha <= 0 or self.envelope_cutoff <= 0:
            raise ValueError("alpha and envelope_cutoff must be positive")

    @classmethod
    def trial_preset(cls) -> "GaborBankSpec":
        return cls(scales=(2,), orientations=(5 * math.pi / 3,))

    @property
    def filter_count(self) -> int:
        return len(self.scales) * len(self.orientations)

    def texture_names(self) -> tuple:
        names = []
        for si, _ in enumerate(self.scales):
            for oi, _ in enumerate(self.orientations):
                names.append(f"gabor_s{si}_o{oi}_mean")
                names.append(f"gabor_s{si}_o{oi}_var")
        return tuple(names)


DEFAULT_BANK = GaborBankSpec()
TEXTURE_NAMES = DEFAULT_BANK.texture_names()
FULL_SCHEMA = STATISTICAL_NAMES + TEXTURE_NAMES + CLINICAL_NAMES


@dataclass(frozen=True)
class FeatureVector:
    """Named ordered real features for one sample, plus its class label."""

    id: str
    label: Label
    values: np.ndarray
    schema: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (len(self.schema),):
            raise ValueError("values length must match the schema")
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "schema", tuple(self.schema))


@dataclass(frozen=True)
class NormStats:
    """Per-feature min and max over the training set."""

    schema: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.shape != (len(self.schema),) or maxs.shape != (len(self.schema),):
            raise ValueError("stats length must match the schema")
        if np.any(mins > maxs):
            raise ValueError("per-feature min must not exceed max")
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


def histogram(img: GrayImage) -> Histogram:
    counts = np.bincount(img.pixels.ravel(), minlength=256)
    return Histogram(counts / counts.sum())


_LEVELS = np.arange(256, dtype=np.float64) / 255.0


def statistical_features(h: Histogram) -> np.ndarray:
    """The eight histogram statistics, in STATISTICAL_NAMES order.

    Intensities are rescaled to [0, 1] before the moment computations so
    smoothness keeps resolution. Contrast is the per-level sum of
    sqrt((z - m)^2 p(z)); skewness and kurtosis stay un-normalized
    central moments.
    """
    p = h.probabilities
    z = _LEVELS
    mean = float(np.dot(z, p))
    dev = z - mean
    variance = float(np.dot(dev**2, p))
    skewness = float(np.dot(dev**3, p))
    uniformity = float(np.dot(p, p))
    nz = p > 0
    entropy = float(-np.dot(p[nz], np.log2(p[nz])))
    kurtosis = float(np.dot(dev**4, p))
    contrast = float(np.sum(np.sqrt(dev**2 * p)))
    smoothness = 1.0 - 1.0 / (1.0 + variance)
    return np.array(
        [mean, variance, skewness, uniformity, entropy, kurtosis, contrast, smoothness]
    )


def gabor_support_radius(s: float, cutoff: float) -> int:
    """Smallest integer r with the Gaussian envelope exp(-s^2 r^2 / 2) < cutoff."""
    r = max(1, math.ceil(math.sqrt(-2.0 * math.log(cutoff)) / s))
    while math.exp(-0.5 * s * s * r * r) >= cutoff:
        r += 1
    while r > 1 and math.exp(-0.5 * s * s * (r - 1) * (r - 1)) < cutoff:
        r -= 1
    return r


def gabor_kernel(spec: GaborBankSpec, omega: int, theta: float) -> np.ndarray:
    """Complex Gabor kernel h(x,y) = s exp(-s^2(x^2+y^2)/2) exp(i pi s (x cos0 + y sin0)).

    s = alpha**(-omega). Support is the smallest square whose Gaussian
    envelope falls below envelope_cutoff at the border.
    """
    if omega not in spec.scales:
        raise ValueError(f"scale {omega} is not in the bank")
    if theta not in spec.orientations:
        raise ValueError(f"orientation {theta} is not in the bank")
    s = spec.alpha ** (-omega)
    r = gabor_support_radius(s, spec.envelope_cutoff)
    coords = np.arange(-r, r + 1, dtype=np.float64)
    x = coords[np.newaxis, :]
    y = coords[:, np.newaxis]
    envelope = s * np.exp(-0.5 * s * s * (x**2 + y**2))
    phase = math.pi * s * (x * math.cos(theta) + y * math.sin(theta))
    return envelope * np.exp(1j * phase)


def convolve(img: GrayImage, kernel: np.ndarray) -> np.ndarray:
    """Magnitude of the true 2-D convolution, replicate-edge padded.

    Output has the image's shape regardless of kernel size.
    """
    response = convolve_complex_raw(img.pixels.astype(np.float64), kernel)
    return np.abs(response)


def texture_features(img: GrayImage, spec: GaborBankSpec = DEFAULT_BANK) -> np.ndarray:
    """Mean and variance of each filter's magnitude response.

    Filters run in (scale, orientation) lexicographic order; the output is
    2 * filter_count values.
    """
    out = []
    for omega in spec.scales:
        for theta in spec.orientations:
            mag = convolve(img, gabor_kernel(spec, omega, theta))
            out.append(float(mag.mean()))
            out.append(float(mag.var()))
    return np.array(out)


def clinical_features(record: SampleRecord) -> np.ndarray:
    """One-hot tissue (F, G, D) followed by one-hot abnormality (6 classes)."""
    if record.abnormality is Abnormality.NORM:
        raise ValueError("NORM records carry no clinical feature encoding")
    tissue = [1.0 if record.tissue is t else 0.0 for t in CLINICAL_TISSUES]
    abnorm = [1.0 if record.abnormality is a else 0.0 for a in CLINICAL_ABNORMALITIES]
    return np.array(tissue + abnorm)


def check_groups(groups) -> tuple:
    """Validate a feature-group selection, returning it in canonical order."""
    chosen = set(groups)
    unknown = chosen - set(FEATURE_GROUPS)
    if unknown:
        raise SchemaError(f"unknown feature groups: {sorted(unknown)}")
    if not chosen:
        raise SchemaError("at least one feature group must be selected")
    return tuple(g for g in FEATURE_GROUPS if g in chosen)


def group_schema(groups, bank: GaborBankSpec = DEFAULT_BANK) -> tuple:
    """Feature names for the chosen groups, in canonical group order."""
    names = ()
    for group in check_groups(groups):
        if group == "statistical":
            names += STATISTICAL_NAMES
        elif group == "texture":
            names += bank.texture_names()
        else:
            names += CLINICAL_NAMES
    return names


def extract_features(record: SampleRecord, image: GrayImage, groups=FEATURE_GROUPS,
                     bank: GaborBankSpec = DEFAULT_BANK) -> FeatureVector:
    """Un-normalized feature vector of one ROI image and its record."""
    parts = []
    for group in check_groups(groups):
        if group == "statistical":
            parts.append(statistical_features(histogram(image)))
        elif group == "texture":
            parts.append(texture_features(image, bank))
        else:
            parts.append(clinical_features(record))
    return FeatureVector(
        record.id, record.label, np.concatenate(parts), group_schema(groups, bank)
    )


def require_same_schema(vectors) -> tuple:
    schemas = {v.schema for v in vectors}
    if len(schemas) != 1:
        raise SchemaError("feature vectors disagree on schema")
    return next(iter(schemas))


def normalize(vectors, stats: NormStats | None = None):
    """Min-max scale each feature to [0, 1] using training-set stats.

    Without stats (training path) the stats come from the vectors
    themselves. Constant features map to 0. Values outside the training
    range (test path) extrapolate beyond [0, 1] and are not clipped.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValueError("nothing to normalize")
    schema = require_same_schema(vectors)
    matrix = np.stack([v.values for v in vectors])
    if stats is None:
        stats = NormStats(schema, matrix.min(axis=0), matrix.max(axis=0))
    elif stats.schema != schema:
        raise SchemaError("normalization stats do not match the vector schema")
    span = stats.maxs - stats.mins
    safe = np.where(span > 0, span, 1.0)
    scaled = (matrix - stats.mins) / safe
    scaled[:, span == 0] = 0.0
    out = [replace(v, values=row) for v, row in zip(vectors, scaled)]
    return out, stats


def select_features(vectors, names) -> list:
    """Project vectors onto the named feature subset, preserving name order."""
    vectors = list(vectors)
    schema = require_same_schema(vectors)
    try:
        idx = [schema.index(n) for n in names]
    except ValueError as exc:
        raise SchemaError(f"unknown feature name: {exc}") from None
    names = tuple(names)
    return [replace(v, values=v.values[idx], schema=names) for v in vectors]


def write_features_csv(path, vectors) -> None:
    """CSV: header of schema names, one row per sample at full precision."""
    vectors = list(vectors)
    schema = require_same_schema(vectors)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("id,label," + ",".join(schema) + "\n")
        for v in vectors:
            vals = ",".join(repr(float(x)) for x in v.values)
            fh.write(f"{v.id},{v.label.value},{vals}\n")


def read_features_csv(path) -> list:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:2] != ["id", "label"]:
            raise SchemaError("feature CSV must start with id,label columns")
        schema = tuple(header[2:])
        vectors = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            label = Label(parts[1])
            values = np.array([float(x) for x in parts[2 : 2 + len(schema)]])
            vectors.append(FeatureVector(parts[0], label, values, schema))
    return vectors


def write_norm_stats(path, stats: NormStats) -> None:
    """Plain text, one line per feature: name, min, max."""
    with open(path, "w", encoding="ascii") as fh:
        for name, lo, hi in zip(stats.schema, stats.mins, stats.maxs):
            fh.write(f"{name} {float(lo)!r} {float(hi)!r}\n")


def read_norm_stats(path) -> NormStats:
    names, mins, maxs = [], [], []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            names.append(parts[0])
            mins.append(float(parts[1]))
            maxs.append(float(parts[2]))
    return NormStats(tuple(names), np.array(mins), np.array(maxs))
