from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np


@dataclass(frozen=True)
class StepOutcome:
    """New iterate, its loss and, when already known, its gradient."""

    x: np.ndarray
    f: float
    grad: Optional[np.ndarray] = None


class Stepper(Protocol):
    """One outer iteration of an optimizer family."""

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        ...
