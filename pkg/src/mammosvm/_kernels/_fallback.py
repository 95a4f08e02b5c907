"""Pure-numpy implementations of the hot image kernels.

These mirror the Cython core in `_core.pyx` tap for tap: the complex
convolution accumulates kernel taps in the same (row, col) order, so the
two backends agree bitwise, not just within tolerance.
"""
import numpy as np


def median_filter_numpy(img: np.ndarray, window: int) -> np.ndarray:
    """Median filter with replicate-edge padding.

    img is a 2-D uint8 array; window is an odd side length >= 3. Work is
    chunked by row bands to keep the sliding-window expansion bounded.
    """
    r = window // 2
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    out = np.empty((h, w), dtype=np.uint8)
    band = max(1, (1 << 22) // (w * window * window))  # ~4M window bytes per band
    for y0 in range(0, h, band):
        y1 = min(y0 + band, h)
        windows = np.lib.stride_tricks.sliding_window_view(
            padded[y0 : y1 + 2 * r], (window, window)
        )
        out[y0:y1] = np.median(windows, axis=(-2, -1)).astype(np.uint8)
    return out


def convolve_complex_numpy(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2-D convolution of a real image with a complex kernel.

    Replicate-edge padding, output same shape as img. Returns the complex
    response; callers take magnitudes. Taps accumulate in (u, v) order so
    each output pixel sees the exact arithmetic sequence of a direct
    double loop.
    """
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    h, w = img.shape
    padded = np.pad(img, ((ry, ry), (rx, rx)), mode="edge")
    acc = np.zeros((h, w), dtype=np.complex128)
    for u in range(-ry, ry + 1):
        for v in range(-rx, rx + 1):
            # out(y, x) += img(y - u, x - v) * kernel(u, v)
            block = padded[ry - u : ry - u + h, rx - v : rx - v + w]
            acc += block * kernel[u + ry, v + rx]
    return acc
