"""Hot image kernels with a compiled core and a pure-numpy fallback.

The Cython extension `_core` is used when it imported successfully and
MAMMOSVM_PURE is unset; otherwise the numpy fallback runs. Both backends
produce bitwise-identical results (see tests/test_backends.py), so the
switch only affects speed.
"""
import os

import numpy as np

from ._fallback import convolve_complex_numpy, median_filter_numpy

try:
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None


def compiled_active() -> bool:
    if not HAVE_COMPILED:
        return False
    return os.environ.get("MAMMOSVM_PURE", "") in ("", "0")


def median_filter_raw(img: np.ndarray, window: int) -> np.ndarray:
    """Median-filter a 2-D uint8 array; replicate-edge padding."""
    if compiled_active():
        return np.asarray(_core.median_filter_u8(img, window))
    return median_filter_numpy(img, window)


def convolve_complex_raw(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve a float64 image with a complex128 kernel; returns complex response."""
    if compiled_active():
        return np.asarray(
            _core.convolve_complex(
                img, np.ascontiguousarray(kernel.real), np.ascontiguousarray(kernel.imag)
            )
        )
    return convolve_complex_numpy(img, kernel)


def median_filter_compiled(img: np.ndarray, window: int) -> np.ndarray:
    if not HAVE_COMPILED:
        raise RuntimeError("compiled kernel core is not available")
    return np.asarray(_core.median_filter_u8(img, window))


def convolve_complex_compiled(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if not HAVE_COMPILED:
        raise RuntimeError("compiled kernel core is not available")
    return np.asarray(
        _core.convolve_complex(
            img, np.ascontiguousarray(kernel.real), np.ascontiguousarray(kernel.imag)
        )
    )
