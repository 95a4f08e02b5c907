"""Compiled core vs numpy fallback vs brute-force oracles."""

import numpy as np
import pytest

from mammosvm import _kernels
from tests.oracles import convolve_reference, median_reference


def _random_image(rng, max_side=24):
    h = int(rng.integers(1, max_side))
    w = int(rng.integers(1, max_side))
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


def test_median_fallback_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(25):
        img = _random_image(rng)
        window = int(rng.choice([3, 5, 7]))
        got = _kernels.median_filter_numpy(img, window)
        assert np.array_equal(got, median_reference(img, window))


def test_convolve_fallback_matches_oracle_bitwise():
    rng = np.random.default_rng(4)
    for _ in range(25):
        img = rng.random((int(rng.integers(1, 12)), int(rng.integers(1, 12))))
        k = int(rng.choice([1, 3, 5]))
        kernel = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        got = _kernels.convolve_complex_numpy(img, kernel)
        want = convolve_reference(img, kernel)
        assert np.array_equal(got, want)


@pytest.mark.skipif(not _kernels.HAVE_COMPILED, reason="compiled core not built")
def test_median_compiled_matches_fallback_bitwise():
    rng = np.random.default_rng(5)
    for _ in range(40):
        img = _random_image(rng)
        window = int(rng.choice([3, 5, 7, 9]))
        a = _kernels.median_filter_compiled(img, window)
        b = _kernels.median_filter_numpy(img, window)
        assert np.array_equal(a, b)


@pytest.mark.skipif(not _kernels.HAVE_COMPILED, reason="compiled core not built")
def test_convolve_compiled_matches_fallback_bitwise():
    rng = np.random.default_rng(6)
    for _ in range(40):
        img = rng.random((int(rng.integers(1, 16)), int(rng.integers(1, 16))))
        k = int(rng.choice([1, 3, 5, 7]))
        kernel = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        a = _kernels.convolve_complex_compiled(img, kernel)
        b = _kernels.convolve_complex_numpy(img, kernel)
        assert np.array_equal(a, b)


def test_env_var_forces_fallback(monkeypatch):
    monkeypatch.setenv("MAMMOSVM_PURE", "1")
    assert not _kernels.compiled_active()
    monkeypatch.setenv("MAMMOSVM_PURE", "0")
    assert _kernels.compiled_active() == _kernels.HAVE_COMPILED
    monkeypatch.delenv("MAMMOSVM_PURE")
    assert _kernels.compiled_active() == _kernels.HAVE_COMPILED


def test_raw_dispatch_honors_env(monkeypatch):
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, size=(9, 9), dtype=np.uint8)
    monkeypatch.setenv("MAMMOSVM_PURE", "1")
    pure = _kernels.median_filter_raw(img, 3)
    monkeypatch.delenv("MAMMOSVM_PURE")
    default = _kernels.median_filter_raw(img, 3)
    assert np.array_equal(pure, default)
    assert np.array_equal(pure, median_reference(img, 3))
