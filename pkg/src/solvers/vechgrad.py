"""
VecHGrad: a truncated-Newton method on the vectorized parameters.

Every outer iteration takes the finite-difference gradient, solves the Newton
system ``H p = -g`` approximately with linear conjugate gradient driven by
Hessian-vector products, and scales the resulting direction with a strong
Wolfe line search.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from .config import OptimizerConfig, OptimizerFamily, RunReport
from .driver import Clock, Start, gradient_oracle, solve
from .errors import DivergenceError
from .linesearch import search_with_fallback
from .numdiff import default_gradient_step, hessian_vector
from .objective import Objective
from .stepping import StepOutcome

logger = logging.getLogger(__name__)

HvOracle = Callable[[np.ndarray], np.ndarray]


def cg_inner(
    grad_at_x: np.ndarray,
    hvp: HvOracle,
    cg_max_iter: int = 20,
    sigma: float = 0.5,
) -> np.ndarray:
    """
    Approximately solve ``H p = -g`` by linear conjugate gradient.

    Parameters
    ----------
    grad_at_x : np.ndarray
        The gradient g at the current iterate.
    hvp : HvOracle
        Returns ``H v`` for a vector ``v``.
    cg_max_iter : int
        Maximum number of CG updates.
    sigma : float
        Stop once ``||r|| <= sigma * ||g||`` with ``r = H p + g``.

    Returns
    -------
    np.ndarray
        The last CG iterate. Starts from ``p = -g``; returns the iterate
        reached before a direction of non-positive curvature, and ``-g`` if
        the Hessian-vector oracle produces non-finite values.
    """
    g = np.asarray(grad_at_x, dtype=np.float64)
    g_norm = float(np.linalg.norm(g))
    if g_norm == 0.0:
        return np.zeros_like(g)
    steepest = -g

    def product(v: np.ndarray) -> Optional[np.ndarray]:
        try:
            hv = np.asarray(hvp(v), dtype=np.float64)
        except DivergenceError:
            return None
        return hv if np.all(np.isfinite(hv)) else None

    p = steepest.copy()
    hp = product(p)
    if hp is None:
        return steepest
    if float(np.dot(p, hp)) <= 0.0:
        logger.debug("non-positive curvature along -g; using steepest descent")
        return steepest

    r = hp + g
    tol = sigma * g_norm
    if np.linalg.norm(r) <= tol:
        return p

    d = -r
    rr = float(np.dot(r, r))
    for k in range(cg_max_iter):
        hd = product(d)
        if hd is None:
            return steepest
        curvature = float(np.dot(d, hd))
        if curvature <= 0.0:
            logger.debug("non-positive curvature at CG iteration %d", k + 1)
            break
        step = rr / curvature
        p = p + step * d
        r = r + step * hd
        rr_new = float(np.dot(r, r))
        if np.sqrt(rr_new) <= tol:
            logger.debug("CG converged in %d iterations", k + 1)
            break
        d = -r + (rr_new / rr) * d
        rr = rr_new
    return p


class VecHGradStepper:
    """One VecHGrad outer iteration: CG direction, then a strong Wolfe step."""

    def __init__(self, f: Objective, cfg: OptimizerConfig) -> None:
        self.f = f
        self.cfg = cfg
        self.gradient = gradient_oracle(f, cfg)

    def direction(self, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
        grad_eta = self.cfg.fd_eta if self.cfg.fd_eta is not None else default_gradient_step(x)

        def hvp(v: np.ndarray) -> np.ndarray:
            return hessian_vector(
                self.f, x, v, grad_x=grad, grad_eta=grad_eta, workers=self.cfg.workers
            )

        p = cg_inner(grad, hvp, self.cfg.cg_max_iter, self.cfg.cg_sigma)
        if not float(np.dot(p, grad)) < 0.0:
            p = -grad
        return p

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        if grad is None:
            grad = self.gradient(x)
        p = self.direction(x, grad)
        result = search_with_fallback(self.f, self.gradient, x, p, self.cfg.wolfe, f0=fx, g0=grad)
        logger.debug("VecHGrad step length %.3e (%d evaluations)", result.alpha, result.evals)
        return StepOutcome(x + result.alpha * p, result.f_new, result.grad_new)


def vechgrad_solve(
    f: Objective,
    x0: Start,
    cfg: Optional[OptimizerConfig] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[Start, RunReport]:
    """Run VecHGrad from ``x0`` under the shared stop rules."""
    cfg = cfg or OptimizerConfig.for_family(OptimizerFamily.VECHGRAD)
    if cfg.family is not OptimizerFamily.VECHGRAD:
        raise ValueError(f"expected a VECHGRAD config, got {cfg.family.name}")
    return solve(f, x0, cfg, stepper=VecHGradStepper(f, cfg), clock=clock)
