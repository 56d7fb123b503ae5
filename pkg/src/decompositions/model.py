"""
Reconstruction, loss and parameter packing for every decomposition family.

The loss is the unsquared Frobenius norm ``||X - X_hat||``. Batched helpers
evaluate many parameter vectors at once; single-point calls go through the
same code path with a batch of one.
"""

from __future__ import annotations

import logging
from typing import Callable, Dict, Mapping, Sequence, Union

import numpy as np

from solvers.objective import Objective
from tensors import DenseTensor, ShapeMismatchError

from . import cp, dedicom, paratuck2
from .spec import Factors, Family, ModelSpec, ParamVector, pack_values, unpack_batch

logger = logging.getLogger(__name__)

# Upper bound on reconstructed entries held in memory per batch chunk.
_CHUNK_ENTRIES = 1 << 22

_RECONSTRUCTORS: Dict[Family, Callable[[Factors], np.ndarray]] = {
    Family.CP: cp.reconstruct_batch,
    Family.DEDICOM: dedicom.reconstruct_batch,
    Family.PARATUCK2: paratuck2.reconstruct_batch,
}


def pack(
    spec: ModelSpec, factors: Union[Mapping[str, np.ndarray], Sequence[np.ndarray]]
) -> ParamVector:
    """
    Lay factors out as one flat vector.

    CP stores A, B, C; DEDICOM stores A, H, then the K diagonals of D;
    PARATUCK2 stores A, DA diagonals, H, DB diagonals, B. Matrices are stored
    column by column, diagonal stacks slice by slice.
    """
    return ParamVector(pack_values(spec, factors), spec)


def unpack(x: ParamVector) -> Factors:
    """Inverse of ``pack``; returns fresh arrays keyed by block name."""
    batched = unpack_batch(x.spec, x.values[None, :])
    return {name: block[0].copy() for name, block in batched.items()}


def reconstruct_batch(spec: ModelSpec, points: np.ndarray) -> np.ndarray:
    """Reconstructions of shape (n, I, J, K) for the rows of ``points``."""
    return _RECONSTRUCTORS[spec.family](unpack_batch(spec, points))


def reconstruct(x: ParamVector) -> DenseTensor:
    return DenseTensor.from_array(reconstruct_batch(x.spec, x.values[None, :])[0])


def _check_target(spec: ModelSpec, target: DenseTensor) -> None:
    if target.dims != spec.target_dims:
        raise ShapeMismatchError(
            f"target has shape {target.dims} but {spec.label} expects {spec.target_dims}"
        )


def loss_batch(spec: ModelSpec, points: np.ndarray, target: DenseTensor) -> np.ndarray:
    _check_target(spec, target)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    chunk = max(1, _CHUNK_ENTRIES // target.size)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        residual = target.array[None] - reconstruct_batch(spec, points[start : start + chunk])
        out[start : start + chunk] = np.sqrt(np.einsum("bijk,bijk->b", residual, residual))
    return out


def loss(x: ParamVector, target: DenseTensor) -> float:
    """``||target - reconstruct(x)||`` (not squared)."""
    return float(loss_batch(x.spec, x.values[None, :], target)[0])


def slice_losses_batch(spec: ModelSpec, points: np.ndarray, target: DenseTensor) -> np.ndarray:
    """Squared residual of every frontal slice, shape (n, K)."""
    _check_target(spec, target)
    residual = target.array[None] - reconstruct_batch(spec, np.atleast_2d(points))
    return np.einsum("bijk,bijk->bk", residual, residual)


def init_random(spec: ModelSpec, seed: int) -> ParamVector:
    """Parameters drawn i.i.d. uniform on [0, 1), deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    return ParamVector(rng.random(spec.param_count), spec)


def make_objective(spec: ModelSpec, target: DenseTensor) -> Objective:
    """
    Wrap the loss of ``spec`` against ``target`` as an optimizer objective.

    The objective also carries one component per frontal slice (the squared
    slice residual), so ``f(x)**2 == sum_k component_k(x)``.
    """
    _check_target(spec, target)

    def evaluate_batch(points: np.ndarray) -> np.ndarray:
        return loss_batch(spec, points, target)

    def evaluate(x: np.ndarray) -> float:
        return float(evaluate_batch(np.asarray(x)[None, :])[0])

    components = tuple(
        _slice_component(spec, target, k) for k in range(spec.target_dims[2])
    )
    logger.debug("objective for %s with %d parameters", spec.label, spec.param_count)
    return Objective(
        eval=evaluate,
        dim=spec.param_count,
        eval_batch=evaluate_batch,
        components=components,
    )


def _slice_component(spec: ModelSpec, target: DenseTensor, k: int) -> Objective:
    def evaluate_batch(points: np.ndarray) -> np.ndarray:
        chunk = max(1, _CHUNK_ENTRIES // target.size)
        return np.concatenate(
            [
                slice_losses_batch(spec, points[start : start + chunk], target)[:, k]
                for start in range(0, points.shape[0], chunk)
            ]
        )

    def evaluate(x: np.ndarray) -> float:
        return float(evaluate_batch(np.asarray(x)[None, :])[0])

    return Objective(eval=evaluate, dim=spec.param_count, eval_batch=evaluate_batch)
