"""Mammogram benign/malignant classification toolkit.

Pipeline stages: PGM/manifest loading -> denoise + background crop +
ROI extraction -> statistical/Gabor-texture/clinical features with
min-max normalization -> deviation-based feature weights -> precomputed
linear kernel matrices -> SMO-trained SVM -> confusion-matrix metrics.
Every stage is importable on its own and exposed as a CLI subcommand.
"""
from . import dataset, features, kernel, metrics, preprocess, svm, synthetic, weighting
from ._kernels import compiled_active

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "compiled_active",
    "dataset",
    "features",
    "kernel",
    "metrics",
    "preprocess",
    "svm",
    "synthetic",
    "weighting",
]
