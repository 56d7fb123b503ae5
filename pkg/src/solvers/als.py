"""
Alternating least squares for CP, DEDICOM and PARATUCK2.

Every block update solves its normal equations ``Z Gram = rhs`` with a
pseudoinverse of the Gram matrix (relative eigenvalue cutoff 1e-12), so
rank-deficient subproblems return the minimum-norm least-squares solution.
Diagonal stacks are updated one frontal slice at a time.

One ALS iteration of the shared driver is one full sweep over the blocks.
"""

from __future__ import annotations

import logging
import time
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import pinvh

from decompositions import dedicom, paratuck2
from decompositions.model import loss_batch, make_objective
from decompositions.spec import Factors, Family, ModelSpec, pack_values, unpack_batch
from tensors import DenseTensor, khatri_rao, unfold

from .config import OptimizerConfig, OptimizerFamily, RunReport
from .driver import Clock, Start, solve
from .errors import DivergenceError
from .stepping import StepOutcome

logger = logging.getLogger(__name__)

PINV_CUTOFF = 1e-12

# Halvings tried towards the linearized DEDICOM diagonal before keeping the old one.
_DIAGONAL_HALVINGS = 8


def _solve_rows(rhs: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Least-squares ``Z`` of ``Z @ gram = rhs`` for a symmetric ``gram``."""
    if not (np.all(np.isfinite(gram)) and np.all(np.isfinite(rhs))):
        raise DivergenceError("non-finite normal equations in ALS")
    return rhs @ pinvh(gram, rtol=PINV_CUTOFF)


def _solve_vec(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return _solve_rows(rhs[None, :], gram)[0]


def _slices(target: DenseTensor) -> np.ndarray:
    # (K, I, J) view of the frontal slices
    return np.moveaxis(target.array, 2, 0)


# ---------------------------------------------------------------------------
# CP
# ---------------------------------------------------------------------------


def cp_factor_update(factors: Factors, target: DenseTensor, mode: int) -> np.ndarray:
    """
    Least-squares update of one CP factor with the other two fixed.

    With row-major unfolding, ``unfold(X, n) = A_n @ khatri_rao(others)^T``
    where the other factors appear in increasing mode order.
    """
    names = ("A", "B", "C")
    others = [factors[name] for i, name in enumerate(names, start=1) if i != mode]
    kr = khatri_rao(others[0], others[1])
    gram = (others[0].T @ others[0]) * (others[1].T @ others[1])
    return _solve_rows(unfold(target, mode) @ kr, gram)


def als_cp_step(factors: Factors, target: DenseTensor) -> Factors:
    """One CP-ALS sweep over A, B and C; returns new arrays."""
    out = {name: np.array(factors[name], dtype=np.float64) for name in ("A", "B", "C")}
    for mode, name in enumerate(("A", "B", "C"), start=1):
        out[name] = cp_factor_update(out, target, mode)
    return out


# ---------------------------------------------------------------------------
# DEDICOM
# ---------------------------------------------------------------------------


def dedicom_a_update(a: np.ndarray, h: np.ndarray, d: np.ndarray, target: DenseTensor) -> np.ndarray:
    """
    Stacked update of A from ``X_k ~ A (D_k H D_k A^T)`` and
    ``X_k^T ~ A (D_k H^T D_k A^T)`` with the previous A on the right.
    """
    x = _slices(target)
    core = dedicom.core_slices(d, h)
    left = core @ a.T
    right = np.transpose(core, (0, 2, 1)) @ a.T
    rhs = np.einsum("kij,krj->ir", x, left) + np.einsum("kji,krj->ir", x, right)
    gram = np.einsum("kri,ksi->rs", left, left) + np.einsum("kri,ksi->rs", right, right)
    return _solve_rows(rhs, gram)


def dedicom_h_update(a: np.ndarray, d: np.ndarray, target: DenseTensor) -> np.ndarray:
    """Exact update of H from ``vec(X_k) = (A D_k kron A D_k) vec(H)`` stacked over k."""
    x = _slices(target)
    r = a.shape[1]
    scaled = a[None, :, :] * d[:, None, :]
    small = np.einsum("kir,kis->krs", scaled, scaled)
    gram = np.einsum("kab,kcd->acbd", small, small).reshape(r * r, r * r)
    projected = np.einsum("kir,kij,kjs->krs", scaled, x, scaled)
    rhs = projected.sum(axis=0).ravel(order="F")
    return _solve_vec(gram, rhs).reshape((r, r), order="F")


def dedicom_d_linearized(a: np.ndarray, h: np.ndarray, d: np.ndarray, target: DenseTensor) -> np.ndarray:
    """
    Least-squares diagonals of ``X_k ~ A diag(d_k) (H D_k A^T)``, with the
    right-hand ``D_k`` held at its current value.
    """
    x = _slices(target)
    ata = a.T @ a
    out = np.empty_like(d)
    for k in range(d.shape[0]):
        right = (h * d[k][None, :]) @ a.T
        gram = ata * (right @ right.T)
        rhs = np.einsum("ir,ij,rj->r", a, x[k], right)
        out[k] = _solve_vec(gram, rhs)
    return out


def _dedicom_slice_residual(a: np.ndarray, h: np.ndarray, dk: np.ndarray, xk: np.ndarray) -> float:
    ad = a * dk[None, :]
    return float(np.linalg.norm(xk - ad @ h @ ad.T))


def dedicom_d_update(a: np.ndarray, h: np.ndarray, d: np.ndarray, target: DenseTensor) -> np.ndarray:
    """
    Move every diagonal towards its linearized least-squares value, halving
    the move until the slice residual does not increase; otherwise keep the
    old diagonal. The loss never increases.
    """
    x = _slices(target)
    proposal = dedicom_d_linearized(a, h, d, target)
    out = d.copy()
    for k in range(d.shape[0]):
        before = _dedicom_slice_residual(a, h, d[k], x[k])
        move = proposal[k] - d[k]
        for _ in range(_DIAGONAL_HALVINGS):
            trial = d[k] + move
            if _dedicom_slice_residual(a, h, trial, x[k]) <= before:
                out[k] = trial
                break
            move = 0.5 * move
    return out


def als_dedicom_step(
    a: np.ndarray, h: np.ndarray, d: np.ndarray, target: DenseTensor
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One DEDICOM sweep: A, then H, then the diagonals of D."""
    a = dedicom_a_update(a, h, d, target)
    h = dedicom_h_update(a, d, target)
    d = dedicom_d_update(a, h, d, target)
    return a, h, d


# ---------------------------------------------------------------------------
# PARATUCK2
# ---------------------------------------------------------------------------


def paratuck2_a_update(da, h, db, b, target: DenseTensor) -> np.ndarray:
    x = _slices(target)
    right = paratuck2.core_slices(da, h, db) @ b.T
    rhs = np.einsum("kij,kpj->ip", x, right)
    gram = np.einsum("kpj,kqj->pq", right, right)
    return _solve_rows(rhs, gram)


def paratuck2_da_update(a, h, db, b, target: DenseTensor) -> np.ndarray:
    x = _slices(target)
    ata = a.T @ a
    out = np.empty((x.shape[0], a.shape[1]))
    for k in range(x.shape[0]):
        right = (h * db[k][None, :]) @ b.T
        rhs = np.einsum("ip,ij,pj->p", a, x[k], right)
        out[k] = _solve_vec(ata * (right @ right.T), rhs)
    return out


def paratuck2_h_update(a, da, db, b, target: DenseTensor) -> np.ndarray:
    """Exact update of H from ``vec(X_k) = (B DB_k kron A DA_k) vec(H)``."""
    x = _slices(target)
    p, q = a.shape[1], b.shape[1]
    left = a[None, :, :] * da[:, None, :]
    right = b[None, :, :] * db[:, None, :]
    left_gram = np.einsum("kip,kis->kps", left, left)
    right_gram = np.einsum("kjq,kjt->kqt", right, right)
    gram = np.einsum("kqt,kps->qpts", right_gram, left_gram).reshape(p * q, p * q)
    projected = np.einsum("kip,kij,kjq->pq", left, x, right)
    return _solve_vec(gram, projected.ravel(order="F")).reshape((p, q), order="F")


def paratuck2_db_update(a, da, h, b, target: DenseTensor) -> np.ndarray:
    x = _slices(target)
    btb = b.T @ b
    out = np.empty((x.shape[0], b.shape[1]))
    for k in range(x.shape[0]):
        left = (a * da[k][None, :]) @ h
        rhs = np.einsum("iq,ij,jq->q", left, x[k], b)
        out[k] = _solve_vec((left.T @ left) * btb, rhs)
    return out


def paratuck2_b_update(a, da, h, db, target: DenseTensor) -> np.ndarray:
    x = _slices(target)
    left = np.einsum("ip,kpq->kiq", a, paratuck2.core_slices(da, h, db))
    rhs = np.einsum("kij,kiq->jq", x, left)
    gram = np.einsum("kiq,kit->qt", left, left)
    return _solve_rows(rhs, gram)


def als_paratuck2_step(
    a: np.ndarray,
    da: np.ndarray,
    h: np.ndarray,
    db: np.ndarray,
    b: np.ndarray,
    target: DenseTensor,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One PARATUCK2 sweep in the order A, DA, H, DB, B."""
    a = paratuck2_a_update(da, h, db, b, target)
    da = paratuck2_da_update(a, h, db, b, target)
    h = paratuck2_h_update(a, da, db, b, target)
    db = paratuck2_db_update(a, da, h, b, target)
    b = paratuck2_b_update(a, da, h, db, target)
    return a, da, h, db, b


# ---------------------------------------------------------------------------
# Driver integration
# ---------------------------------------------------------------------------


def als_sweep(spec: ModelSpec, factors: Factors, target: DenseTensor) -> Factors:
    """One sweep for any family, on factors keyed by block name."""
    if spec.family is Family.CP:
        return als_cp_step(factors, target)
    if spec.family is Family.DEDICOM:
        a, h, d = als_dedicom_step(factors["A"], factors["H"], factors["D"], target)
        return {"A": a, "H": h, "D": d}
    updated = als_paratuck2_step(
        factors["A"], factors["DA"], factors["H"], factors["DB"], factors["B"], target
    )
    return dict(zip(("A", "DA", "H", "DB", "B"), updated))


class AlsStepper:
    """Adapts ALS sweeps to the shared driver's stepper interface."""

    def __init__(self, spec: ModelSpec, target: DenseTensor) -> None:
        self.spec = spec
        self.target = target

    def step(self, x: np.ndarray, fx: float, grad: Optional[np.ndarray]) -> StepOutcome:
        factors: Dict[str, np.ndarray] = {
            name: block[0].copy() for name, block in unpack_batch(self.spec, x[None, :]).items()
        }
        new_x = pack_values(self.spec, als_sweep(self.spec, factors, self.target))
        return StepOutcome(new_x, float(loss_batch(self.spec, new_x[None, :], self.target)[0]))


def als_solve(
    spec: ModelSpec,
    target: DenseTensor,
    x0: Start,
    cfg: Optional[OptimizerConfig] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[Start, RunReport]:
    """Run ALS sweeps from ``x0`` until the shared stop rules fire."""
    cfg = cfg or OptimizerConfig.for_family(OptimizerFamily.ALS)
    if cfg.family is not OptimizerFamily.ALS:
        raise ValueError(f"expected an ALS config, got {cfg.family.name}")
    f = make_objective(spec, target)
    return solve(f, x0, cfg, stepper=AlsStepper(spec, target), clock=clock)
