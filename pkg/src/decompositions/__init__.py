"""Decomposition families (CP, DEDICOM, PARATUCK2) and their parameter layouts."""

from .model import (
    init_random,
    loss,
    make_objective,
    pack,
    reconstruct,
    unpack,
)
from .spec import Family, ModelSpec, ModelSpecError, ParamVector, param_count

__all__ = [
    "Family",
    "ModelSpec",
    "ModelSpecError",
    "ParamVector",
    "init_random",
    "loss",
    "make_objective",
    "pack",
    "param_count",
    "reconstruct",
    "unpack",
]
