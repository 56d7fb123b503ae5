"""
First-order baseline updates: SGD, NAG, Adam, RMSProp, AdaGrad and SAGA.

Each update is a pure function of ``(state, grad, cfg)``. SAGA works on the
finite-sum split of the squared loss over frontal slices: ``grad`` is the
gradient of the sampled slice's squared residual and the result is mapped
back to the unsquared norm by the chain rule ``grad f = grad f**2 / (2 f)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .config import OptimizerConfig, OptimizerFamily
from .driver import gradient_oracle
from .numdiff import default_gradient_step, fd_gradient
from .objective import Objective
from .stepping import StepOutcome


@dataclass(frozen=True)
class BaselineState:
    x: np.ndarray
    t: int = 0
    velocity: Optional[np.ndarray] = None
    first_moment: Optional[np.ndarray] = None
    second_moment: Optional[np.ndarray] = None
    accumulator: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None
    table_sum: Optional[np.ndarray] = None
    sample: int = 0
    loss: float = 1.0


def init_state(family: OptimizerFamily, x: np.ndarray, n_components: int = 0) -> BaselineState:
    """Zero moments, accumulators and gradient table for ``family``."""
    x = np.array(x, dtype=np.float64)
    zeros = np.zeros_like(x)
    if family is OptimizerFamily.NAG:
        return BaselineState(x=x, velocity=zeros)
    if family is OptimizerFamily.ADAM:
        return BaselineState(x=x, first_moment=zeros, second_moment=zeros.copy())
    if family is OptimizerFamily.RMSPROP:
        return BaselineState(x=x, second_moment=zeros)
    if family is OptimizerFamily.ADAGRAD:
        return BaselineState(x=x, accumulator=zeros)
    if family is OptimizerFamily.SAGA:
        if n_components < 1:
            raise ValueError("SAGA needs an objective split into at least one component")
        return BaselineState(x=x, table=np.zeros((n_components, x.size)), table_sum=zeros)
    return BaselineState(x=x)


def gradient_point(state: BaselineState, cfg: OptimizerConfig) -> np.ndarray:
    """Where the next gradient must be evaluated (NAG looks ahead along its velocity)."""
    if cfg.family is OptimizerFamily.NAG:
        return state.x - cfg.momentum * state.velocity
    return state.x


def baseline_step(
    family: OptimizerFamily,
    state: BaselineState,
    grad: np.ndarray,
    cfg: OptimizerConfig,
) -> Tuple[np.ndarray, BaselineState]:
    """
    One update of a first-order baseline.

    Returns
    -------
    Tuple[np.ndarray, BaselineState]
        The new iterate and the new state (the input state is not modified).
    """
    g = np.asarray(grad, dtype=np.float64)
    x = state.x
    t = state.t + 1

    if family is OptimizerFamily.SGD:
        new_x = x - cfg.lr * g
        return new_x, replace(state, x=new_x, t=t)

    if family is OptimizerFamily.NAG:
        velocity = cfg.momentum * state.velocity + cfg.lr * g
        new_x = x - velocity
        return new_x, replace(state, x=new_x, t=t, velocity=velocity)

    if family is OptimizerFamily.ADAM:
        m = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * g**2
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        new_x = x - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        return new_x, replace(state, x=new_x, t=t, first_moment=m, second_moment=v)

    if family is OptimizerFamily.RMSPROP:
        v = cfg.momentum * state.second_moment + (1.0 - cfg.momentum) * g**2
        new_x = x - cfg.lr * g / np.sqrt(v + cfg.epsilon)
        return new_x, replace(state, x=new_x, t=t, second_moment=v)

    if family is OptimizerFamily.ADAGRAD:
        acc = state.accumulator + g**2
        new_x = x - cfg.lr * g / (np.sqrt(acc) + cfg.epsilon)
        return new_x, replace(state, x=new_x, t=t, accumulator=acc)

    if family is OptimizerFamily.SAGA:
        j = state.sample
        n = state.table.shape[0]
        estimate = n * (g - state.table[j]) + state.table_sum
        table = state.table.copy()
        table_sum = state.table_sum + (g - table[j])
        table[j] = g
        direction = estimate / (2.0 * state.loss) if state.loss > 0 else np.zeros_like(g)
        new_x = x - cfg.lr * direction
        return new_x, replace(state, x=new_x, t=t, table=table, table_sum=table_sum)

    raise ValueError(f"{family.name} is not a first-order baseline")


class FirstOrderStepper:
    """Drives one first-order baseline with finite-difference gradients."""

    def __init__(self, f: Objective, cfg: OptimizerConfig) -> None:
        if not cfg.family.is_first_order:
            raise ValueError(f"{cfg.family.name} is not a first-order baseline")
        self.f = f
        self.cfg = cfg
        self.gradient = gradient_oracle(f, cfg)
        self.rng = np.random.default_rng(cfg.seed)
        self.state: Optional[BaselineState] = None

    def _component_gradient(self, x: np.ndarray) -> Tuple[int, np.ndarray]:
        j = int(self.rng.integers(len(self.f.components)))
        eta = self.cfg.fd_eta if self.cfg.fd_eta is not None else default_gradient_step(x)
        return j, fd_gradient(self.f.components[j], x, eta, workers=self.cfg.workers)

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        family = self.cfg.family
        if self.state is None or not np.array_equal(self.state.x, x):
            self.state = init_state(family, x, len(self.f.components))

        if family is OptimizerFamily.SAGA:
            j, g = self._component_gradient(x)
            self.state = replace(self.state, sample=j, loss=fx)
        else:
            g = self.gradient(gradient_point(self.state, self.cfg))

        new_x, self.state = baseline_step(family, self.state, g, self.cfg)
        return StepOutcome(new_x, self.f(new_x))
