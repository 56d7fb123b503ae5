"""
Limited-memory BFGS.

The inverse-Hessian approximation is kept implicitly as the last ``m``
curvature pairs ``(s, y)`` and applied with the two-loop recursion. The
initial matrix is scaled by ``s.y / y.y`` of the newest pair.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from typing import Deque, Optional, Tuple

import numpy as np

from .config import OptimizerConfig, OptimizerFamily, RunReport
from .driver import Clock, Start, gradient_oracle, solve
from .linesearch import search_with_fallback
from .objective import Objective
from .stepping import StepOutcome

logger = logging.getLogger(__name__)

# Pairs with s.y <= _CURVATURE_TOL * |s| |y| are rejected.
_CURVATURE_TOL = 1e-10


class InverseLbfgs:
    """
    Limited-memory approximation to the inverse Hessian.

    Parameters
    ----------
    npairs : int
        Number of (s, y) pairs retained; the oldest is discarded first.
    """

    def __init__(self, npairs: int) -> None:
        self.pairs: Deque[Tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=npairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def store(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Add a curvature pair; returns False when it is rejected."""
        sy = float(np.dot(s, y))
        if not sy > _CURVATURE_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            logger.debug("rejected curvature pair (s.y = %.3e)", sy)
            return False
        self.pairs.append((s.copy(), y.copy(), sy))
        return True

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Two-loop recursion: the approximate inverse Hessian times ``v``."""
        q = np.array(v, dtype=np.float64)
        alphas = []
        for s, y, sy in reversed(self.pairs):
            alpha = float(np.dot(s, q)) / sy
            q -= alpha * y
            alphas.append(alpha)

        if self.pairs:
            _, y_last, sy_last = self.pairs[-1]
            q *= sy_last / float(np.dot(y_last, y_last))

        for (s, y, sy), alpha in zip(self.pairs, reversed(alphas)):
            beta = float(np.dot(y, q)) / sy
            q += (alpha - beta) * s
        return q


class LbfgsStepper:
    def __init__(self, f: Objective, cfg: OptimizerConfig) -> None:
        self.f = f
        self.cfg = cfg
        self.gradient = gradient_oracle(f, cfg)
        self.memory = InverseLbfgs(cfg.history)
        self.x_prev: Optional[np.ndarray] = None
        self.grad_prev: Optional[np.ndarray] = None

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        if grad is None:
            grad = self.gradient(x)
        if self.x_prev is not None:
            self.memory.store(x - self.x_prev, grad - self.grad_prev)

        p = -self.memory.matvec(grad)
        if not float(np.dot(p, grad)) < 0.0:
            logger.debug("L-BFGS direction is not descent; resetting memory")
            self.memory.pairs.clear()
            p = -grad

        result = search_with_fallback(self.f, self.gradient, x, p, self.cfg.wolfe, f0=fx, g0=grad)
        self.x_prev, self.grad_prev = x, grad
        return StepOutcome(x + result.alpha * p, result.f_new, result.grad_new)


def lbfgs_solve(
    f: Objective,
    x0: Start,
    cfg: Optional[OptimizerConfig] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[Start, RunReport]:
    """Run L-BFGS from ``x0`` under the shared stop rules."""
    cfg = cfg or OptimizerConfig.for_family(OptimizerFamily.LBFGS)
    if cfg.family is not OptimizerFamily.LBFGS:
        raise ValueError(f"expected an LBFGS config, got {cfg.family.name}")
    return solve(f, x0, cfg, stepper=LbfgsStepper(f, cfg), clock=clock)
