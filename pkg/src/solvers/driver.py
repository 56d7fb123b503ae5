"""
The shared optimization driver.

Every family runs through ``solve``: it records the loss once per outer
iteration, times the run with an injected clock and applies the stop rules
in this order: iteration budget, loss threshold ``eps1`` and gradient
threshold ``eps2`` (line-search families only), the step itself, and the
small-decrease rule ``0 <= f_i - f_{i+1} <= decrease_tol``.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Optional, Tuple, Union

import numpy as np

from decompositions.spec import ParamVector

from .config import OptimizerConfig, OptimizerFamily, RunReport, StopReason
from .errors import DivergenceError, LineSearchError
from .numdiff import default_gradient_step, fd_gradient
from .objective import Objective
from .rates import convergence_rate
from .stepping import Stepper

logger = logging.getLogger(__name__)

Clock = Callable[[], float]
Start = Union[np.ndarray, ParamVector]


def gradient_oracle(f: Objective, cfg: OptimizerConfig) -> Callable[[np.ndarray], np.ndarray]:
    def gradient(x: np.ndarray) -> np.ndarray:
        eta = cfg.fd_eta if cfg.fd_eta is not None else default_gradient_step(x)
        return fd_gradient(f, x, eta, workers=cfg.workers)

    return gradient


def make_stepper(f: Objective, cfg: OptimizerConfig) -> Stepper:
    """Stepper for every family that works on a bare objective (all but ALS)."""
    from .baselines import FirstOrderStepper
    from .lbfgs import LbfgsStepper
    from .ncg import NcgStepper
    from .vechgrad import VecHGradStepper

    if cfg.family is OptimizerFamily.VECHGRAD:
        return VecHGradStepper(f, cfg)
    if cfg.family is OptimizerFamily.NCG:
        return NcgStepper(f, cfg)
    if cfg.family is OptimizerFamily.LBFGS:
        return LbfgsStepper(f, cfg)
    if cfg.family.is_first_order:
        return FirstOrderStepper(f, cfg)
    raise ValueError(f"{cfg.family.name} needs the decomposition itself; build its stepper explicitly")


def solve(
    f: Objective,
    x0: Start,
    cfg: OptimizerConfig,
    *,
    stepper: Optional[Stepper] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[Start, RunReport]:
    """
    Run ``cfg.family`` from ``x0`` until a stop rule fires.

    Returns
    -------
    Tuple[Start, RunReport]
        The final iterate (a ``ParamVector`` when ``x0`` is one) and the report.
    """
    start = clock()
    x = np.array(x0.values if isinstance(x0, ParamVector) else x0, dtype=np.float64)
    if stepper is None:
        stepper = make_stepper(f, cfg)
    gradient = gradient_oracle(f, cfg)

    fx = f(x)
    history = [fx]
    grad: Optional[np.ndarray] = None
    message = ""
    stop: Optional[StopReason] = None
    if not np.isfinite(fx):
        stop = StopReason.DIVERGED

    while stop is None:
        t = len(history) - 1
        if t >= cfg.max_iter:
            stop = StopReason.MAX_ITER
            break
        try:
            if cfg.family.uses_line_search:
                if fx <= cfg.eps1:
                    stop = StopReason.LOSS_BELOW_EPS1
                    break
                if grad is None:
                    grad = gradient(x)
                if np.linalg.norm(grad) <= cfg.eps2:
                    stop = StopReason.GRAD_BELOW_EPS2
                    break
            outcome = stepper.step(x, fx, grad)
        except LineSearchError as err:
            stop, message = StopReason.LINE_SEARCH_FAIL, str(err)
            break
        except DivergenceError as err:
            stop, message = StopReason.DIVERGED, str(err)
            break

        if not np.isfinite(outcome.f) or not np.all(np.isfinite(outcome.x)):
            stop, message = StopReason.DIVERGED, "non-finite iterate"
            break

        decrease = fx - outcome.f
        x, fx, grad = outcome.x, outcome.f, outcome.grad
        history.append(fx)
        logger.debug("%s iteration %d: loss %.6g", cfg.name, t + 1, fx)
        if 0.0 <= decrease <= cfg.decrease_tol:
            stop = StopReason.SMALL_DECREASE

    report = RunReport(
        loss_history=history,
        final_loss=history[-1],
        iterations=len(history) - 1,
        wall_time_seconds=clock() - start,
        stop_reason=stop,
        convergence_rate_q=convergence_rate(history),
        message=message,
    )
    logger.info(
        "%s stopped (%s) after %d iterations, loss %.6g",
        cfg.name,
        stop.value,
        report.iterations,
        report.final_loss,
    )
    final = x0.with_values(x) if isinstance(x0, ParamVector) else x
    return final, report


def run_until_convergence(
    f: Objective,
    x0: Start,
    cfg: OptimizerConfig,
    clock: Clock = time.perf_counter,
    *,
    stepper: Optional[Stepper] = None,
) -> RunReport:
    """Run the family's step under the shared stop rules and return only the report."""
    _, report = solve(f, x0, cfg, stepper=stepper, clock=clock)
    return report
