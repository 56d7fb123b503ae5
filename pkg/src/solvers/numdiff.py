"""
Finite-difference derivative oracles.

The gradient uses the fourth-order central stencil

    df/dx_i ~ (2 [f(x - 2h e_i) - f(x + 2h e_i)] + 16 [f(x + h e_i) - f(x - h e_i)]) / (4! h)

which costs 4d objective evaluations and is exact for polynomials of degree
four or less. Hessian-vector products difference two such gradients along
the direction, so the d x d Hessian is never formed.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .errors import DivergenceError
from .objective import Objective

logger = logging.getLogger(__name__)

# Rows of stencil points evaluated per batch call.
_MAX_BATCH_ROWS = 4096
# Norm of the shift along p used to difference gradients.
_HV_DISPLACEMENT = 1e-5


def default_gradient_step(x: np.ndarray) -> float:
    """h = 1e-5 * max(1, ||x||_inf)."""
    return 1e-5 * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)


def default_hv_step(p: np.ndarray) -> float:
    """h = 1e-5 / ||p||_2, so the displacement ``h p`` always has norm 1e-5."""
    norm = float(np.linalg.norm(p))
    return _HV_DISPLACEMENT / norm if norm > 0.0 else _HV_DISPLACEMENT


def _combine(values: np.ndarray, eta: float) -> np.ndarray:
    # values[:, 0..3] = f(x - 2h), f(x - h), f(x + h), f(x + 2h)
    return (
        2.0 * (values[:, 0] - values[:, 3]) + 16.0 * (values[:, 2] - values[:, 1])
    ) / (24.0 * eta)


_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])


def _component_values(f: Objective, x: np.ndarray, i: int, eta: float) -> np.ndarray:
    out = np.empty(4)
    for slot, offset in enumerate(_OFFSETS):
        shifted = x.copy()
        shifted[i] += offset * eta
        out[slot] = f(shifted)
    return out


def fd_gradient(
    f: Objective,
    x: np.ndarray,
    eta: Optional[float] = None,
    *,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Fourth-order finite-difference gradient.

    Parameters
    ----------
    f : Objective
        The function to differentiate.
    x : np.ndarray
        Point of evaluation.
    eta : Optional[float]
        Perturbation; defaults to ``default_gradient_step(x)``.
    workers : Optional[int]
        When greater than one, the per-component stencils are evaluated on a
        thread pool. The result is identical to sequential evaluation because
        every component is computed independently.

    Returns
    -------
    np.ndarray
        The gradient estimate.

    Raises
    ------
    DivergenceError
        If any stencil evaluation is non-finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if eta is None:
        eta = default_gradient_step(x)
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    d = x.size

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.array(list(pool.map(lambda i: _component_values(f, x, i, eta), range(d))))
    elif f.eval_batch is not None:
        values = np.empty((d, 4))
        step = max(1, _MAX_BATCH_ROWS // 4)
        for start in range(0, d, step):
            idx = np.arange(start, min(d, start + step))
            points = np.repeat(x[None, :], idx.size * 4, axis=0)
            rows = np.arange(idx.size * 4)
            points[rows, np.repeat(idx, 4)] += np.tile(_OFFSETS, idx.size) * eta
            values[idx] = f.batch(points).reshape(idx.size, 4)
    else:
        values = np.array([_component_values(f, x, i, eta) for i in range(d)]).reshape(d, 4)

    if not np.all(np.isfinite(values)):
        raise DivergenceError("objective returned a non-finite value inside the FD stencil")
    return _combine(values, eta)


def hessian_vector(
    f: Objective,
    x: np.ndarray,
    p: np.ndarray,
    eta: Optional[float] = None,
    *,
    grad_x: Optional[np.ndarray] = None,
    grad_eta: Optional[float] = None,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Hessian-vector product by forward gradient differencing.

    Returns ``(grad f(x + eta p) - grad f(x)) / eta``. ``grad_x`` may be
    passed in to reuse a gradient already computed at ``x``; it must have
    been computed with the same ``grad_eta``.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise DivergenceError("direction is not finite")
    if not np.any(p):
        return np.zeros_like(x)
    if eta is None:
        eta = default_hv_step(p)
    if grad_eta is None:
        grad_eta = default_gradient_step(x)
    if grad_x is None:
        grad_x = fd_gradient(f, x, grad_eta, workers=workers)
    grad_shifted = fd_gradient(f, x + eta * p, grad_eta, workers=workers)
    return (grad_shifted - grad_x) / eta
