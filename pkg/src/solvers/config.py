from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Union

from .linesearch import WolfeParams


class OptimizerFamily(Enum):
    """Optimizers available to the shared driver."""

    VECHGRAD = "vechgrad"
    SGD = "sgd"
    NAG = "nag"
    ADAM = "adam"
    RMSPROP = "rmsprop"
    SAGA = "saga"
    ADAGRAD = "adagrad"
    NCG = "ncg"
    LBFGS = "lbfgs"
    ALS = "als"

    @classmethod
    def parse(cls, value: Union[str, OptimizerFamily]) -> OptimizerFamily:
        if isinstance(value, OptimizerFamily):
            return value
        normalized = str(value).strip().lower().replace("-", "")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"unknown optimizer: {value!r}")

    @property
    def is_first_order(self) -> bool:
        return self in FIRST_ORDER

    @property
    def uses_line_search(self) -> bool:
        """Families stopped by the loss/gradient thresholds as well as the decrease rule."""
        return self in (OptimizerFamily.VECHGRAD, OptimizerFamily.NCG, OptimizerFamily.LBFGS)


FIRST_ORDER = frozenset(
    {
        OptimizerFamily.SGD,
        OptimizerFamily.NAG,
        OptimizerFamily.ADAM,
        OptimizerFamily.RMSPROP,
        OptimizerFamily.SAGA,
        OptimizerFamily.ADAGRAD,
    }
)


class StopReason(Enum):
    MAX_ITER = "MAX_ITER"
    SMALL_DECREASE = "SMALL_DECREASE"
    LOSS_BELOW_EPS1 = "LOSS_BELOW_EPS1"
    GRAD_BELOW_EPS2 = "GRAD_BELOW_EPS2"
    LINE_SEARCH_FAIL = "LINE_SEARCH_FAIL"
    DIVERGED = "DIVERGED"


GRADIENT_BUDGET = 10_000
HESSIAN_BUDGET = 1_000
GRADIENT_FREE_BUDGET = 100_000

# Hyperparameters of the benchmark study, per family.
_FAMILY_DEFAULTS: Dict[OptimizerFamily, Dict[str, Any]] = {
    OptimizerFamily.SGD: {"lr": 1e-4, "max_iter": GRADIENT_BUDGET},
    OptimizerFamily.NAG: {"lr": 1e-4, "momentum": 0.9, "max_iter": GRADIENT_BUDGET},
    OptimizerFamily.ADAM: {
        "lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "max_iter": GRADIENT_BUDGET,
    },
    OptimizerFamily.RMSPROP: {
        "lr": 1e-3,
        "momentum": 0.9,
        "epsilon": 1e-8,
        "max_iter": GRADIENT_BUDGET,
    },
    OptimizerFamily.SAGA: {"lr": 1e-4, "max_iter": GRADIENT_BUDGET},
    OptimizerFamily.ADAGRAD: {"lr": 1e-2, "epsilon": 1e-8, "max_iter": GRADIENT_BUDGET},
    OptimizerFamily.NCG: {"max_iter": GRADIENT_BUDGET, "wolfe": WolfeParams(c2=0.1)},
    OptimizerFamily.LBFGS: {"max_iter": HESSIAN_BUDGET},
    OptimizerFamily.VECHGRAD: {"max_iter": HESSIAN_BUDGET},
    OptimizerFamily.ALS: {"max_iter": GRADIENT_FREE_BUDGET},
}

_GENERIC_DEFAULTS: Dict[str, Any] = {
    "lr": 1e-3,
    "momentum": 0.9,
    "beta1": 0.9,
    "beta2": 0.999,
    "epsilon": 1e-8,
    "history": 10,
    "cg_max_iter": 20,
    "cg_sigma": 0.5,
    "eps1": 1.0,
    "eps2": 1e-6,
    "max_iter": GRADIENT_BUDGET,
    "decrease_tol": 1e-3,
    "wolfe": WolfeParams(),
}


@dataclass(frozen=True)
class OptimizerConfig:
    """
    An optimizer family and all of its hyperparameters.

    Any field left as ``None`` takes the family default: SGD lr=1e-4;
    NAG momentum=0.9, lr=1e-4; Adam beta1=0.9, beta2=0.999, epsilon=1e-8,
    lr=1e-3; RMSProp momentum (decay)=0.9, lr=1e-3, epsilon=1e-8; SAGA
    lr=1e-4; AdaGrad lr=0.01, epsilon=1e-8. Budgets are 10,000 iterations for
    gradient methods, 1,000 for VecHGrad and L-BFGS, 100,000 ALS sweeps.
    """

    family: OptimizerFamily
    lr: Optional[float] = None
    momentum: Optional[float] = None
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    epsilon: Optional[float] = None
    history: Optional[int] = None
    cg_max_iter: Optional[int] = None
    cg_sigma: Optional[float] = None
    eps1: Optional[float] = None
    eps2: Optional[float] = None
    max_iter: Optional[int] = None
    decrease_tol: Optional[float] = None
    wolfe: Optional[WolfeParams] = None
    fd_eta: Optional[float] = None
    seed: int = 0
    workers: Optional[int] = None
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        family = OptimizerFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        defaults = {**_GENERIC_DEFAULTS, **_FAMILY_DEFAULTS[family]}
        for key, value in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        if self.name is None:
            object.__setattr__(self, "name", family.value)

        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.cg_max_iter < 1 or self.history < 1:
            raise ValueError("cg_max_iter and history must be at least 1")
        if self.lr <= 0 or self.cg_sigma <= 0:
            raise ValueError("lr and cg_sigma must be positive")

    @classmethod
    def for_family(cls, family: Union[str, OptimizerFamily], **overrides: Any) -> OptimizerConfig:
        return cls(family=OptimizerFamily.parse(family), **overrides)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> OptimizerConfig:
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        if isinstance(data.get("wolfe"), dict):
            data["wolfe"] = WolfeParams(**data["wolfe"])
        return cls(**data)

    def with_overrides(self, **overrides: Any) -> OptimizerConfig:
        return replace(self, **overrides)


@dataclass
class RunReport:
    """
    Outcome of one optimizer run.

    ``loss_history`` has one entry per accepted iteration plus the initial
    loss, so ``len(loss_history) == iterations + 1``.
    """

    loss_history: List[float]
    final_loss: float
    iterations: int
    wall_time_seconds: float
    stop_reason: StopReason
    convergence_rate_q: Optional[float] = None
    message: str = ""

    def __post_init__(self) -> None:
        if len(self.loss_history) != self.iterations + 1:
            raise ValueError("loss_history must hold iterations + 1 entries")
