"""
Dense N-order tensor storage.

Every tensor in the library is linearized row-major: the last index varies
fastest, so a 2x2x2 tensor is stored as x111, x112, x121, ..., x222. The same
order is used by ``vectorize``, ``unfold`` and the parameter layouts built on
top of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import InvalidModeError, ShapeMismatchError, TensorError


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """
    An immutable dense tensor of 64-bit floats.

    Parameters
    ----------
    dims : Tuple[int, ...]
        Positive extents (I1, ..., IN).
    data : np.ndarray
        Flat row-major entries, ``len(data) == prod(dims)``.
    """

    dims: Tuple[int, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d <= 0 for d in dims):
            raise TensorError(f"tensor extents must be positive, got {dims}")

        data = np.array(self.data, dtype=np.float64).reshape(-1)
        if data.size != int(np.prod(dims)):
            raise ShapeMismatchError(
                f"{data.size} entries do not fill a tensor of shape {dims}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> DenseTensor:
        array = np.asarray(array, dtype=np.float64)
        return cls(dims=array.shape, data=array.reshape(-1))

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> DenseTensor:
        return cls(dims=tuple(dims), data=np.zeros(int(np.prod(dims))))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries with shape ``dims``."""
        return self.data.reshape(self.dims)

    def __sub__(self, other: DenseTensor) -> DenseTensor:
        if self.dims != other.dims:
            raise ShapeMismatchError(f"cannot subtract {other.dims} from {self.dims}")
        return DenseTensor(self.dims, self.data - other.data)

    def __add__(self, other: DenseTensor) -> DenseTensor:
        if self.dims != other.dims:
            raise ShapeMismatchError(f"cannot add {other.dims} to {self.dims}")
        return DenseTensor(self.dims, self.data + other.data)

    def allclose(self, other: DenseTensor, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return self.dims == other.dims and np.allclose(self.data, other.data, rtol=rtol, atol=atol)


def vectorize(t: DenseTensor) -> np.ndarray:
    """Flatten ``t`` in row-major order (a copy; the tensor stays immutable)."""
    return t.data.copy()


def frobenius_norm(t: DenseTensor) -> float:
    """Square root of the sum of all squared entries."""
    return float(np.linalg.norm(t.data))


def rank_one(vectors: Sequence[Iterable[float]]) -> DenseTensor:
    """
    Outer product of N vectors.

    Parameters
    ----------
    vectors : Sequence[Iterable[float]]
        N >= 1 nonempty vectors; the n-th gives the extent of mode n.

    Returns
    -------
    DenseTensor
        ``x[i1, ..., iN] = prod_n vectors[n][in]``.
    """
    factors = [np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]
    if not factors or any(f.size == 0 for f in factors):
        raise TensorError("rank_one needs at least one nonempty vector")
    return DenseTensor.from_array(reduce(np.multiply.outer, factors))


def _check_mode(mode: int, order: int) -> int:
    if not 1 <= mode <= order:
        raise InvalidModeError(mode, order)
    return mode - 1


def unfold(t: DenseTensor, mode: int) -> np.ndarray:
    """
    Mode-``mode`` matricization (modes are 1-based).

    Row ``i`` holds the entries with index ``i`` along ``mode``; the remaining
    indices run over the columns in row-major order (increasing mode order,
    last index fastest). With this ordering
    ``unfold(X, n) == A[n] @ khatri_rao(...other factors in mode order...).T``
    for a CP tensor.
    """
    axis = _check_mode(mode, t.order)
    return np.moveaxis(t.array, axis, 0).reshape(t.dims[axis], -1).copy()


def fold(matrix: np.ndarray, mode: int, dims: Sequence[int]) -> DenseTensor:
    """Inverse of ``unfold``: rebuild a tensor of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    axis = _check_mode(mode, len(dims))
    matrix = np.asarray(matrix, dtype=np.float64)
    moved = (dims[axis],) + dims[:axis] + dims[axis + 1 :]
    if matrix.size != int(np.prod(dims)) or matrix.shape[0] != dims[axis]:
        raise ShapeMismatchError(f"matrix of shape {matrix.shape} cannot fold into {dims}")
    return DenseTensor.from_array(np.moveaxis(matrix.reshape(moved), 0, axis))


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; row ``i * J + j`` holds ``a[i, r] * b[j, r]``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(
            f"khatri_rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}"
        )
    return np.einsum("ir,jr->ijr", a, b).reshape(a.shape[0] * b.shape[0], a.shape[1])
