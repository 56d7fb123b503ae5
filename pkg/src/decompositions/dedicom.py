"""DEDICOM: every frontal slice is X_k = A D_k H D_k A^T."""

import numpy as np

from .spec import Factors


def core_slices(d: np.ndarray, h: np.ndarray) -> np.ndarray:
    """D_k H D_k for every k, with diagonals ``d`` of shape (..., K, R)."""
    return d[..., :, :, None] * h[..., None, :, :] * d[..., :, None, :]


def reconstruct_batch(factors: Factors) -> np.ndarray:
    a = factors["A"]
    inner = core_slices(factors["D"], factors["H"])
    return np.einsum("bir,bkrs,bjs->bijk", a, inner, a)
