"""
Dense tensor primitives.

Groups:
    1. vectorize / frobenius_norm / rank_one
    2. unfold, fold and the Khatri-Rao product
"""

import numpy as np
import pytest

from tensors import (
    DenseTensor,
    InvalidModeError,
    ShapeMismatchError,
    TensorError,
    fold,
    frobenius_norm,
    khatri_rao,
    rank_one,
    unfold,
    vectorize,
)


# ═══ Group 1: vectorize, norm, rank_one ═══


def test_vectorize_is_row_major():
    entries = np.array(
        [[[100 * i + 10 * j + k for k in (1, 2)] for j in (1, 2)] for i in (1, 2)], dtype=float
    )
    assert vectorize(DenseTensor.from_array(entries)).tolist() == [111, 112, 121, 122, 211, 212, 221, 222]


def test_vectorize_trivial_shapes():
    assert vectorize(DenseTensor((1, 1, 1), [5.0])).tolist() == [5.0]
    assert vectorize(DenseTensor.from_array([[1, 2, 3], [4, 5, 6]])).tolist() == [1, 2, 3, 4, 5, 6]


def test_vectorize_returns_a_copy():
    t = DenseTensor.from_array(np.ones((2, 2)))
    v = vectorize(t)
    v[0] = 9.0
    assert t.data[0] == 1.0


def test_frobenius_norm():
    assert frobenius_norm(DenseTensor.from_array(np.ones((2, 2, 2)))) == pytest.approx(np.sqrt(8))
    assert frobenius_norm(DenseTensor.zeros((3, 1, 4))) == 0.0
    assert frobenius_norm(DenseTensor((2,), [3.0, 4.0])) == pytest.approx(5.0)


def test_rank_one_entries():
    t = rank_one(([1, 2], [1, 1], [1, 0]))
    assert t.dims == (2, 2, 2)
    assert t.array[1, 0, 0] == 2.0
    assert t.array[1, 1, 1] == 0.0
    assert rank_one(([1], [1], [1])).data.tolist() == [1.0]
    two = rank_one(([2, 0], [3]))
    assert two.dims == (2, 1)
    assert two.data.tolist() == [6.0, 0.0]


def test_rank_one_rejects_empty():
    with pytest.raises(TensorError):
        rank_one([])
    with pytest.raises(TensorError):
        rank_one(([1.0], []))


def test_tensor_rejects_bad_shapes():
    with pytest.raises(ShapeMismatchError):
        DenseTensor((2, 2), [1.0, 2.0, 3.0])
    with pytest.raises(TensorError):
        DenseTensor((0, 2), [])


def test_tensor_is_immutable():
    t = DenseTensor.from_array(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        t.data[0] = 1.0


# ═══ Group 2: unfold, fold, Khatri-Rao ═══


def test_unfold_rank_one_example():
    t = rank_one(([1, 2], [1, 1], [1, 0]))
    np.testing.assert_array_equal(unfold(t, 1), [[1, 0, 1, 0], [2, 0, 2, 0]])


def test_unfold_scalar_tensor():
    t = DenseTensor((1, 1, 1), [7.0])
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(unfold(t, mode), [[7.0]])


def test_unfold_shapes_and_fold_round_trip(rng):
    t = DenseTensor.from_array(rng.random((2, 3, 4)))
    for mode, rows in zip((1, 2, 3), (2, 3, 4)):
        matrix = unfold(t, mode)
        assert matrix.shape == (rows, 24 // rows)
        assert fold(matrix, mode, t.dims).allclose(t, rtol=0.0)


@pytest.mark.parametrize("mode", [0, 4, -1])
def test_unfold_invalid_mode(mode):
    t = DenseTensor.zeros((2, 2, 2))
    with pytest.raises(InvalidModeError):
        unfold(t, mode)


def test_fold_rejects_wrong_size():
    with pytest.raises(ShapeMismatchError):
        fold(np.zeros((2, 3)), 1, (2, 2, 2))


def test_khatri_rao_examples():
    np.testing.assert_array_equal(khatri_rao([[1], [2]], [[3], [4]]), [[3], [4], [6], [8]])
    np.testing.assert_array_equal(
        khatri_rao(np.eye(2), np.eye(2)), [[1, 0], [0, 0], [0, 0], [0, 1]]
    )
    np.testing.assert_array_equal(khatri_rao([[1]], [[1]]), [[1]])


def test_khatri_rao_column_mismatch():
    with pytest.raises(ShapeMismatchError):
        khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


def test_unfold_of_cp_tensor_matches_khatri_rao(rng):
    a, b, c = rng.random((3, 2)), rng.random((4, 2)), rng.random((5, 2))
    t = DenseTensor.from_array(np.einsum("ir,jr,kr->ijk", a, b, c))
    np.testing.assert_allclose(unfold(t, 1), a @ khatri_rao(b, c).T, rtol=1e-12)
    np.testing.assert_allclose(unfold(t, 2), b @ khatri_rao(a, c).T, rtol=1e-12)
    np.testing.assert_allclose(unfold(t, 3), c @ khatri_rao(a, b).T, rtol=1e-12)
