"""Nonlinear conjugate gradient with the Hestenes-Stiefel update."""

from __future__ import annotations

import logging
import time
from typing import Optional, Tuple

import numpy as np

from .config import OptimizerConfig, OptimizerFamily, RunReport
from .driver import Clock, Start, gradient_oracle, solve
from .linesearch import search_with_fallback
from .objective import Objective
from .stepping import StepOutcome

logger = logging.getLogger(__name__)


def hestenes_stiefel(grad: np.ndarray, grad_prev: np.ndarray, direction_prev: np.ndarray) -> float:
    """``g.(g - g_prev) / d_prev.(g - g_prev)``; 0 when the denominator vanishes."""
    y = grad - grad_prev
    denom = float(np.dot(direction_prev, y))
    if denom == 0.0 or not np.isfinite(denom):
        return 0.0
    return float(np.dot(grad, y)) / denom


class NcgStepper:
    def __init__(self, f: Objective, cfg: OptimizerConfig) -> None:
        self.f = f
        self.cfg = cfg
        self.gradient = gradient_oracle(f, cfg)
        self.grad_prev: Optional[np.ndarray] = None
        self.direction_prev: Optional[np.ndarray] = None

    def direction(self, grad: np.ndarray) -> np.ndarray:
        if self.grad_prev is None:
            return -grad
        beta = hestenes_stiefel(grad, self.grad_prev, self.direction_prev)
        if beta <= 0.0:
            logger.debug("NCG restart (beta = %.3e)", beta)
            return -grad
        p = -grad + beta * self.direction_prev
        if float(np.dot(p, grad)) >= 0.0:
            logger.debug("NCG restart (not a descent direction)")
            return -grad
        return p

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        if grad is None:
            grad = self.gradient(x)
        p = self.direction(grad)
        result = search_with_fallback(self.f, self.gradient, x, p, self.cfg.wolfe, f0=fx, g0=grad)
        self.grad_prev, self.direction_prev = grad, p
        return StepOutcome(x + result.alpha * p, result.f_new, result.grad_new)


def ncg_solve(
    f: Objective,
    x0: Start,
    cfg: Optional[OptimizerConfig] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[Start, RunReport]:
    """Run Hestenes-Stiefel NCG from ``x0`` under the shared stop rules."""
    cfg = cfg or OptimizerConfig.for_family(OptimizerFamily.NCG)
    if cfg.family is not OptimizerFamily.NCG:
        raise ValueError(f"expected an NCG config, got {cfg.family.name}")
    return solve(f, x0, cfg, stepper=NcgStepper(f, cfg), clock=clock)
