"""PARATUCK2: every frontal slice is X_k = A DA_k H DB_k B^T."""

import numpy as np

from .spec import Factors


def core_slices(da: np.ndarray, h: np.ndarray, db: np.ndarray) -> np.ndarray:
    """DA_k H DB_k for every k; diagonals have shape (..., K, P) and (..., K, Q)."""
    return da[..., :, :, None] * h[..., None, :, :] * db[..., :, None, :]


def reconstruct_batch(factors: Factors) -> np.ndarray:
    inner = core_slices(factors["DA"], factors["H"], factors["DB"])
    return np.einsum("bip,bkpq,bjq->bijk", factors["A"], inner, factors["B"])
