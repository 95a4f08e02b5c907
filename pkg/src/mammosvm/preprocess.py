"""Preprocessing: noise injection (test utility), median denoising,
background cropping and ROI extraction.

All functions are pure over immutable inputs. The median filter and its
fallback live in `_kernels`; border handling is replicate-clamping
throughout so no artificial dark frame shifts the Otsu threshold.
"""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._kernels import median_filter_raw
from .dataset import GrayImage, SampleRecord


class CropError(ValueError):
    """Background cropping found no foreground component."""


@dataclass(frozen=True)
class MedianSpec:
    window: int = 3

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("median window must be an odd integer >= 3")


@dataclass(frozen=True)
class CropResult:
    """Cropped image plus the crop origin (x, y) in source coordinates."""

    image: GrayImage
    offset: tuple[int, int]


def add_salt_pepper(img: GrayImage, density: float, seed: int) -> GrayImage:
    """Replace ~density of the pixels with 0 or 255 (half each, in expectation).

    Deterministic per seed. density=0 returns the input unchanged.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if density == 0.0:
        return img
    rng = np.random.default_rng(seed)
    mask = rng.random(img.pixels.shape) < density
    salt = rng.integers(0, 2, size=img.pixels.shape).astype(bool)
    out = np.array(img.pixels)
    out[mask & salt] = 255
    out[mask & ~salt] = 0
    return GrayImage(out)


def median_filter(img: GrayImage, spec: MedianSpec = MedianSpec()) -> GrayImage:
    """Each output pixel is the median of its clamped square window."""
    return GrayImage(median_filter_raw(img.pixels, spec.window))


def otsu_threshold(img: GrayImage) -> int:
    """Otsu's threshold over the 256-bin histogram.

    Returns the level t maximizing between-class variance of the split
    {<= t} / {> t}; ties resolve to the lowest level, so a degenerate
    (constant) histogram yields t = 0 and a constant black image has an
    empty foreground.
    """
    counts = np.bincount(img.pixels.ravel(), minlength=256).astype(np.float64)
    total = counts.sum()
    p = counts / total
    omega = np.cumsum(p)
    mu = np.cumsum(p * np.arange(256))
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    between[~np.isfinite(between)] = 0.0
    return int(np.argmax(between))


def crop_background(img: GrayImage, threshold: int | None = None) -> CropResult:
    """Crop to the bounding box of the largest bright 8-connected component.

    Foreground is intensity > threshold (default: Otsu over the histogram).
    Raises CropError when nothing exceeds the threshold.
    """
    if threshold is None:
        threshold = otsu_threshold(img)
    fg = img.pixels > threshold
    if not fg.any():
        raise CropError("no foreground component above the threshold")
    labels, count = ndimage.label(fg, structure=np.ones((3, 3), dtype=int))
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    largest = int(np.argmax(areas))
    rows, cols = np.nonzero(labels == largest)
    y0, y1 = rows.min(), rows.max() + 1
    x0, x1 = cols.min(), cols.max() + 1
    return CropResult(GrayImage(img.pixels[y0:y1, x0:x1]), (int(x0), int(y0)))


def extract_roi(img: GrayImage, record: SampleRecord, side: int = 128) -> GrayImage:
    """Square crop of the given side around the record's roi center.

    MIAS roi coordinates use a bottom-left origin, so the y flip happens
    here and only here. Out-of-bounds parts are filled by edge replication,
    keeping the output exactly side x side.
    """
    if record.roi is None:
        raise ValueError(f"record {record.id} has no roi")
    if side < 2 or side % 2 != 0:
        raise ValueError("side must be a positive even integer >= 2")
    row_c = img.height - 1 - record.roi.center_y
    col_c = record.roi.center_x
    rows = np.clip(np.arange(row_c - side // 2, row_c + side // 2), 0, img.height - 1)
    cols = np.clip(np.arange(col_c - side // 2, col_c + side // 2), 0, img.width - 1)
    return GrayImage(img.pixels[np.ix_(rows, cols)])


def shift_roi_record(record: SampleRecord, crop: CropResult, src_height: int) -> SampleRecord:
    """Re-express a record's roi in the coordinates of a crop of its image.

    The bottom-left y origin moves up by the margin the crop removed below
    the breast region. Centers falling outside the crop are clamped to its
    bounds (extract_roi then pads by replication as usual).
    """
    if record.roi is None:
        raise ValueError(f"record {record.id} has no roi")
    ox, oy = crop.offset
    ch, cw = crop.image.height, crop.image.width
    cut_below = src_height - oy - ch
    x = min(max(record.roi.center_x - ox, 0), cw - 1)
    y = min(max(record.roi.center_y - cut_below, 0), ch - 1)
    roi = type(record.roi)(x, y, record.roi.radius)
    return SampleRecord(record.id, record.tissue, record.abnormality, record.label, roi)
