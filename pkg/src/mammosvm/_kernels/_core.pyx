# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled image kernels: median filtering and complex convolution.

Arithmetic matches the numpy fallback bitwise: the convolution visits
kernel taps in the same (u, v) order and accumulates real/imaginary
parts as plain double adds.
"""
import numpy as np

cimport numpy as cnp
from libc.string cimport memset

cnp.import_array()


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def median_filter_u8(const cnp.uint8_t[:, :] img, int window):
    """Median filter with replicate-edge padding (window odd, >= 3).

    Sliding-histogram median per row: moving the window one pixel right
    exchanges one (clamped) column, so each output costs O(window) bin
    updates plus a short walk to re-locate the median rank.
    """
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef int r = window // 2
    cdef int mid = (window * window) // 2  # 0-based rank of the median
    cdef Py_ssize_t y, x, src
    cdef int u, v, mdn, below
    cdef unsigned char val
    cdef int hist[256]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, :] out = out_arr
    with nogil:
        for y in range(h):
            memset(hist, 0, sizeof(hist))
            for u in range(-r, r + 1):
                src = _clamp(y + u, 0, h - 1)
                for v in range(-r, r + 1):
                    hist[img[src, _clamp(v, 0, w - 1)]] += 1
            mdn = 0
            below = 0
            while below + hist[mdn] <= mid:
                below += hist[mdn]
                mdn += 1
            out[y, 0] = <unsigned char> mdn
            for x in range(1, w):
                for u in range(-r, r + 1):
                    src = _clamp(y + u, 0, h - 1)
                    val = img[src, _clamp(x - 1 - r, 0, w - 1)]
                    hist[val] -= 1
                    if val < mdn:
                        below -= 1
                    val = img[src, _clamp(x + r, 0, w - 1)]
                    hist[val] += 1
                    if val < mdn:
                        below += 1
                while below > mid:
                    mdn -= 1
                    below -= hist[mdn]
                while below + hist[mdn] <= mid:
                    below += hist[mdn]
                    mdn += 1
                out[y, x] = <unsigned char> mdn
    return out_arr


def convolve_complex(const cnp.float64_t[:, :] img,
                     const cnp.float64_t[:, :] kre,
                     const cnp.float64_t[:, :] kim):
    """True convolution of a real image with a complex kernel (re, im parts).

    Replicate-edge padding; returns a complex128 array of the same shape.
    """
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t kh = kre.shape[0]
    cdef Py_ssize_t kw = kre.shape[1]
    cdef Py_ssize_t ry = kh // 2
    cdef Py_ssize_t rx = kw // 2
    cdef Py_ssize_t y, x, u, v, yy, xx
    cdef double re, im, pix
    out_arr = np.empty((h, w), dtype=np.complex128)
    cdef cnp.complex128_t[:, :] out = out_arr
    with nogil:
        for y in range(h):
            for x in range(w):
                re = 0.0
                im = 0.0
                for u in range(-ry, ry + 1):
                    for v in range(-rx, rx + 1):
                        yy = _clamp(y - u, 0, h - 1)
                        xx = _clamp(x - v, 0, w - 1)
                        pix = img[yy, xx]
                        re += pix * kre[u + ry, v + rx]
                        im += pix * kim[u + ry, v + rx]
                out[y, x].real = re
                out[y, x].imag = im
    return out_arr
