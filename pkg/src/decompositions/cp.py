"""CP / PARAFAC: a sum of R rank-one outer products."""

import numpy as np

from .spec import Factors


def reconstruct_batch(factors: Factors) -> np.ndarray:
    """x[b, i, j, k] = sum_r A[b, i, r] * B[b, j, r] * C[b, k, r]."""
    return np.einsum("bir,bjr,bkr->bijk", factors["A"], factors["B"], factors["C"])
