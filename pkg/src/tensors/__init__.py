"""Dense tensors and the multilinear primitives shared by every other package."""

from .dense import (
    DenseTensor,
    fold,
    frobenius_norm,
    khatri_rao,
    rank_one,
    unfold,
    vectorize,
)
from .errors import InvalidModeError, ShapeMismatchError, TensorError

__all__ = [
    "DenseTensor",
    "InvalidModeError",
    "ShapeMismatchError",
    "TensorError",
    "fold",
    "frobenius_norm",
    "khatri_rao",
    "rank_one",
    "unfold",
    "vectorize",
]
