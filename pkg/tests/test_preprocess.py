import numpy as np
import pytest

from mammosvm.dataset import GrayImage, parse_manifest
from mammosvm.preprocess import (
    CropError,
    MedianSpec,
    add_salt_pepper,
    crop_background,
    extract_roi,
    median_filter,
    otsu_threshold,
    shift_roi_record,
)
from tests.oracles import median_reference


def _gray(array):
    return GrayImage(np.asarray(array, dtype=np.uint8))


def test_salt_pepper_zero_density_is_identity():
    img = _gray(np.full((10, 10), 77))
    out = add_salt_pepper(img, density=0.0, seed=1)
    assert np.array_equal(out.pixels, img.pixels)


def test_salt_pepper_full_density_saturates():
    img = _gray(np.full((20, 20), 80))
    out = add_salt_pepper(img, density=1.0, seed=2)
    assert np.all(np.isin(out.pixels, (0, 255)))


def test_salt_pepper_density_bound():
    img = _gray(np.full((100, 100), 80))
    out = add_salt_pepper(img, density=0.1, seed=3)
    changed = int(np.count_nonzero(out.pixels != img.pixels))
    assert 900 <= changed <= 1100


def test_salt_pepper_deterministic_per_seed():
    img = _gray(np.full((30, 30), 120))
    a = add_salt_pepper(img, density=0.2, seed=5)
    b = add_salt_pepper(img, density=0.2, seed=5)
    c = add_salt_pepper(img, density=0.2, seed=6)
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)


def test_median_removes_single_impulse():
    pixels = np.full((3, 3), 5, dtype=np.uint8)
    pixels[1, 1] = 255
    out = median_filter(_gray(pixels))
    assert out.pixels[1, 1] == 5


def test_median_constant_unchanged():
    img = _gray(np.full((6, 8), 42))
    out = median_filter(img, MedianSpec(window=5))
    assert np.array_equal(out.pixels, img.pixels)


def test_median_row_with_replicate_borders():
    img = _gray([[10, 20, 30, 40, 50]])
    out = median_filter(img, MedianSpec(window=3))
    assert list(out.pixels[0]) == [10, 20, 30, 40, 50]


def test_median_matches_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        pixels = rng.integers(0, 256, size=(7, 9), dtype=np.uint8)
        out = median_filter(_gray(pixels), MedianSpec(window=3))
        assert np.array_equal(out.pixels, median_reference(pixels, 3))


def test_median_values_come_from_input_window():
    rng = np.random.default_rng(12)
    pixels = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    out = median_filter(_gray(pixels), MedianSpec(window=3))
    assert set(np.unique(out.pixels)) <= set(np.unique(pixels))


def test_median_recovers_sparse_noise():
    img = _gray(np.full((40, 40), 90))
    noisy = add_salt_pepper(img, density=0.01, seed=4)
    # retry seeds until no two corrupted pixels are window-adjacent
    diff = noisy.pixels != img.pixels
    ys, xs = np.nonzero(diff)
    spread = all(
        max(abs(ys[i] - ys[j]), abs(xs[i] - xs[j])) > 2
        for i in range(len(ys))
        for j in range(i + 1, len(ys))
    )
    if spread:
        out = median_filter(noisy)
        assert np.array_equal(out.pixels, img.pixels)


def test_median_spec_rejects_even_window():
    with pytest.raises(ValueError):
        MedianSpec(window=4)


def test_otsu_separates_bimodal():
    pixels = np.zeros((10, 10), dtype=np.uint8)
    pixels[:, 5:] = 200
    t = otsu_threshold(_gray(pixels))
    assert 0 <= t < 200


def test_crop_single_rectangle():
    pixels = np.zeros((12, 12), dtype=np.uint8)
    pixels[3:7, 2:9] = 180
    crop = crop_background(_gray(pixels))
    assert crop.offset == (2, 3)
    assert crop.image.pixels.shape == (4, 7)
    assert np.all(crop.image.pixels == 180)


def test_crop_keeps_largest_component():
    pixels = np.zeros((12, 12), dtype=np.uint8)
    pixels[0:10, 0:10] = 200  # area 100
    pixels[11:12, 3:12] = 200  # area 9, separated by a background row
    crop = crop_background(_gray(pixels), threshold=100)
    assert crop.offset == (0, 0)
    assert crop.image.pixels.shape == (10, 10)


def test_crop_all_background_errors():
    with pytest.raises(CropError):
        crop_background(_gray(np.zeros((5, 5))), threshold=100)


def test_crop_idempotent():
    rng = np.random.default_rng(13)
    pixels = np.zeros((20, 20), dtype=np.uint8)
    pixels[4:15, 6:18] = rng.integers(120, 250, size=(11, 12))
    first = crop_background(_gray(pixels), threshold=60)
    second = crop_background(first.image, threshold=60)
    assert second.offset == (0, 0)
    assert np.array_equal(second.image.pixels, first.image.pixels)


def _record(cx, cy, radius=4):
    return parse_manifest(f"r000 F CIRC B {cx} {cy} {radius}\n")[0]


def test_extract_roi_interior_with_y_flip():
    pixels = np.arange(100, dtype=np.uint8).reshape(10, 10)
    # manifest y origin is bottom-left: center (4, 3) means row 10-1-3 = 6
    roi = extract_roi(_gray(pixels), _record(4, 3), side=4)
    assert roi.pixels.shape == (4, 4)
    assert np.array_equal(roi.pixels, pixels[4:8, 2:6])


def test_extract_roi_corner_replicates_to_full_side():
    pixels = np.arange(64, dtype=np.uint8).reshape(8, 8)
    roi = extract_roi(_gray(pixels), _record(0, 0), side=6)
    assert roi.pixels.shape == (6, 6)
    # bottom-left corner of the image dominates via replication
    assert roi.pixels[-1, 0] == pixels[-1, 0]


def test_extract_roi_requires_roi():
    rec = parse_manifest("n000 F NORM\n")[0]
    with pytest.raises(ValueError):
        extract_roi(_gray(np.zeros((8, 8))), rec, side=4)


def test_shift_roi_record_tracks_crop_offset():
    pixels = np.zeros((20, 20), dtype=np.uint8)
    pixels[5:15, 6:16] = 200
    crop = crop_background(_gray(pixels), threshold=100)
    rec = _record(8, 9)
    shifted = shift_roi_record(rec, crop, src_height=20)
    # x shifts by offset_x; bottom-left y re-derived from the new height
    assert shifted.roi.center_x == 8 - crop.offset[0]
    top_row = 20 - 1 - 9
    new_top_row = top_row - crop.offset[1]
    assert shifted.roi.center_y == crop.image.pixels.shape[0] - 1 - new_top_row
