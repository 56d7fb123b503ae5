from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Objective:
    """
    A scalar objective f: R^d -> R.

    Parameters
    ----------
    eval : Callable[[np.ndarray], float]
        Deterministic evaluation at one point; must be safe to call from
        several threads at once.
    dim : int
        Number of variables d.
    eval_batch : Optional[Callable[[np.ndarray], np.ndarray]]
        Optional vectorized evaluation of the rows of an (n, d) array.
    components : Tuple[Objective, ...]
        Optional finite-sum split ``f**2 == sum(component(x))`` used by SAGA.
    """

    eval: Callable[[np.ndarray], float]
    dim: int
    eval_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    components: Tuple["Objective", ...] = field(default=())

    def __call__(self, x: np.ndarray) -> float:
        return float(self.eval(np.asarray(x, dtype=np.float64)))

    def batch(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.eval_batch is not None:
            return np.asarray(self.eval_batch(points), dtype=np.float64).reshape(-1)
        return np.array([self.eval(row) for row in points], dtype=np.float64)
