import numpy as np
import pytest

from mammosvm.kernel import (
    KernelFormatError,
    KernelMatrix,
    KernelMode,
    build_test_rows,
    build_train_matrix,
    gram_matrix,
    linear_kernel,
    read_precomputed,
    read_test_rows,
    read_train_matrix,
    write_precomputed,
    write_test_rows,
)
from mammosvm.kernel import TestKernelRow as KernelRow
from tests.conftest import make_vectors

WORKED_POINTS = [[1, 1, 1, 1], [0, 3, 0, 3], [0, 0, 1, 0]]
WORKED_ENTRIES = [[4, 6, 1], [6, 18, 0], [1, 0, 1]]


def _worked_vectors():
    return make_vectors(WORKED_POINTS, [1, -1, 1])


def test_linear_kernel_worked_values():
    x1, x2, x3 = _worked_vectors()
    assert linear_kernel(x1, x1) == 4.0
    assert linear_kernel(x1, x3) == 1.0
    zero = make_vectors([[0, 0, 0, 0]], [1])[0]
    assert linear_kernel(x2, zero) == 0.0


def test_build_train_matrix_worked_example():
    matrix = build_train_matrix(_worked_vectors())
    assert np.array_equal(matrix.entries, WORKED_ENTRIES)
    assert matrix.labels == ("1", "-1", "1")
    assert matrix.mode is KernelMode.PLAIN


def test_worked_example_serialization_is_bit_exact():
    matrix = KernelMatrix(("10", "40", "20"), np.array(WORKED_ENTRIES, dtype=float))
    text = write_precomputed(matrix)
    assert text.splitlines() == [
        "10 0:1 1:4 2:6 3:1",
        "40 0:2 1:6 2:18 3:0",
        "20 0:3 1:1 2:0 3:1",
    ]


def test_weighted_diagonal_uniform_weights():
    vectors = _worked_vectors()
    n = 4
    matrix = build_train_matrix(
        vectors, KernelMode.WEIGHTED_DIAGONAL, np.full(n, 1.0 / n)
    )
    plain = np.array(WORKED_ENTRIES, dtype=float)
    want = plain.copy()
    np.fill_diagonal(want, np.diag(plain) / n)
    assert np.allclose(matrix.entries, want, atol=1e-15)


def test_full_weighted_one_hot_projects_single_feature():
    vectors = _worked_vectors()
    weights = np.array([0.0, 1.0, 0.0, 0.0])
    matrix = build_train_matrix(vectors, KernelMode.FULL_WEIGHTED, weights)
    x = np.array(WORKED_POINTS, dtype=float)
    assert np.array_equal(matrix.entries, np.outer(x[:, 1], x[:, 1]))


def test_full_weighted_is_positive_semidefinite():
    rng = np.random.default_rng(41)
    for _ in range(20):
        x = rng.standard_normal((6, 5))
        w = rng.random(5)
        w /= w.sum()
        k = gram_matrix(x, KernelMode.FULL_WEIGHTED, w)
        assert np.min(np.linalg.eigvalsh(k)) >= -1e-8


def test_plain_equals_scaled_uniform_full_weighted():
    rng = np.random.default_rng(42)
    x = rng.standard_normal((5, 7))
    n = x.shape[1]
    plain = gram_matrix(x, KernelMode.PLAIN)
    uniform = gram_matrix(x, KernelMode.FULL_WEIGHTED, np.full(n, 1.0 / n))
    assert np.allclose(plain, uniform * n, atol=1e-12)


def test_weighted_modes_require_weights():
    with pytest.raises(ValueError):
        build_train_matrix(_worked_vectors(), KernelMode.WEIGHTED_DIAGONAL)


def test_build_test_rows_worked_example():
    train = _worked_vectors()
    test = make_vectors([[1, 0, 1, 0]], [1])
    (row,) = build_test_rows(test, train)
    assert np.array_equal(row.values, [2, 0, 1])
    assert write_test_rows([row]) == "? 0:1 1:2 2:0 3:1\n"


def test_build_test_rows_consistency_and_empty():
    train = _worked_vectors()
    rows = build_test_rows(train, train)
    for i, row in enumerate(rows):
        assert np.array_equal(row.values, WORKED_ENTRIES[i])
    assert build_test_rows([], train) == []


def test_permutation_permutes_matrix():
    rng = np.random.default_rng(43)
    vectors = make_vectors(rng.standard_normal((5, 3)), [1, -1, 1, -1, 1])
    perm = [3, 0, 4, 1, 2]
    base = build_train_matrix(vectors)
    permuted = build_train_matrix([vectors[i] for i in perm])
    assert np.allclose(permuted.entries, base.entries[np.ix_(perm, perm)])
    assert permuted.labels == tuple(base.labels[i] for i in perm)


def test_round_trip_is_bitwise():
    rng = np.random.default_rng(44)
    vectors = make_vectors(rng.standard_normal((4, 6)), [1, 1, -1, -1])
    matrix = build_train_matrix(vectors)
    text = write_precomputed(matrix)
    again = read_train_matrix(text)
    assert np.array_equal(again.entries, matrix.entries)
    assert again.labels == matrix.labels
    assert write_precomputed(again) == text


def test_read_rejects_malformed_text():
    with pytest.raises(KernelFormatError):
        read_precomputed("1 1:4 2:6\n")  # missing 0: column
    with pytest.raises(KernelFormatError):
        read_precomputed("1 0:1 2:6\n")  # non-contiguous
    with pytest.raises(KernelFormatError):
        read_precomputed("1 0:1 1:x\n")  # bad value
    with pytest.raises(KernelFormatError):
        read_precomputed("")
    with pytest.raises(KernelFormatError):
        read_train_matrix("1 0:1 1:4 2:6\n")  # not square


def test_read_test_rows_assigns_query_ids():
    rows = read_test_rows("? 0:1 1:2 2:0 3:1\n? 0:2 1:1 2:1 3:1\n")
    assert [r.query_id for r in rows] == ["1", "2"]
    assert np.array_equal(rows[1].values, [1, 1, 1])


def test_test_kernel_row_coerces_values():
    row = KernelRow("q", [1, 2, 3])
    assert row.values.dtype == np.float64
