"""
Strong Wolfe line search (bracketing phase followed by a zoom phase with
cubic and quadratic interpolation), plus the Armijo backtracking fallback.

A step length alpha along a descent direction p is accepted when

    f(x + alpha p) <= f(x) + c1 alpha p.grad f(x)            (sufficient decrease)
    |p.grad f(x + alpha p)| <= c2 |p.grad f(x)|              (strong curvature)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Tuple

import numpy as np

from .errors import LineSearchError, LineSearchInternalError
from .objective import Objective

logger = logging.getLogger(__name__)

GradientOracle = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WolfeParams:
    c1: float = 1e-4
    c2: float = 0.9
    alpha_init: float = 1.0
    alpha_max: float = 1e3
    max_evals: int = 60

    def __post_init__(self) -> None:
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if self.alpha_init <= 0 or self.alpha_max <= 0:
            raise ValueError("alpha_init and alpha_max must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")


@dataclass(frozen=True)
class LineSearchResult:
    """
    Accepted step. Unpacks as ``(alpha, f_new, evals)``.

    ``grad_new`` is the gradient at the new point when the search computed
    it; ``weak`` marks a step that only satisfies sufficient decrease.
    """

    alpha: float
    f_new: float
    evals: int
    grad_new: Optional[np.ndarray] = None
    weak: bool = False

    def __iter__(self) -> Iterator[float]:
        return iter((self.alpha, self.f_new, self.evals))


class _LineFunction:
    """phi(alpha) = f(x + alpha p) and its derivative, with an evaluation budget."""

    def __init__(
        self, f: Objective, grad: GradientOracle, x: np.ndarray, p: np.ndarray, budget: int
    ) -> None:
        self.f = f
        self.grad = grad
        self.x = x
        self.p = p
        self.budget = budget
        self.evals = 0
        self.gradients: Dict[float, np.ndarray] = {}

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.budget

    def phi(self, alpha: float) -> float:
        self.evals += 1
        return self.f(self.x + alpha * self.p)

    def derphi(self, alpha: float) -> float:
        self.evals += 1
        g = self.grad(self.x + alpha * self.p)
        self.gradients[alpha] = g
        return float(np.dot(g, self.p))


def _cubicmin(a: float, fa: float, fpa: float, b: float, fb: float, c: float, fc: float) -> Optional[float]:
    # Minimizer of the cubic through (a, fa), (b, fb), (c, fc) with slope fpa at a.
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            dc = c - a
            denom = (db * dc) ** 2 * (db - dc)
            d1 = np.array([[dc**2, -(db**2)], [-(dc**3), db**3]])
            coef_a, coef_b = d1 @ np.array([fb - fa - fpa * db, fc - fa - fpa * dc])
            coef_a /= denom
            coef_b /= denom
            radical = coef_b * coef_b - 3 * coef_a * fpa
            xmin = a + (-coef_b + np.sqrt(radical)) / (3 * coef_a)
        except (ArithmeticError, FloatingPointError):
            return None
    return float(xmin) if np.isfinite(xmin) else None


def _quadmin(a: float, fa: float, fpa: float, b: float, fb: float) -> Optional[float]:
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            curvature = (fb - fa - fpa * db) / (db * db)
            xmin = a - fpa / (2.0 * curvature)
        except (ArithmeticError, FloatingPointError):
            return None
    return float(xmin) if np.isfinite(xmin) else None


class _Candidates:
    """Best sufficient-decrease point seen so far (the weak fallback)."""

    def __init__(self, phi0: float, dphi0: float, c1: float) -> None:
        self.phi0 = phi0
        self.dphi0 = dphi0
        self.c1 = c1
        self.best: Optional[Tuple[float, float]] = None

    def offer(self, alpha: float, value: float) -> None:
        if value < self.phi0 and value <= self.phi0 + self.c1 * alpha * self.dphi0:
            if self.best is None or value < self.best[1]:
                self.best = (alpha, value)


def _zoom(
    line: _LineFunction,
    a_lo: float,
    a_hi: float,
    phi_lo: float,
    phi_hi: float,
    dphi_lo: float,
    phi0: float,
    dphi0: float,
    params: WolfeParams,
    candidates: _Candidates,
) -> Optional[Tuple[float, float, float]]:
    delta1 = 0.2  # cubic interpolant check
    delta2 = 0.1  # quadratic interpolant check
    phi_rec = phi0
    a_rec = 0.0
    i = 0
    while not line.exhausted:
        dalpha = a_hi - a_lo
        lo, hi = (a_hi, a_lo) if dalpha < 0 else (a_lo, a_hi)

        a_j = None
        if i > 0:
            cchk = delta1 * abs(dalpha)
            a_j = _cubicmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi, a_rec, phi_rec)
            if a_j is not None and (a_j > hi - cchk or a_j < lo + cchk):
                a_j = None
        if a_j is None:
            qchk = delta2 * abs(dalpha)
            a_j = _quadmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi)
            if a_j is None or a_j > hi - qchk or a_j < lo + qchk:
                a_j = a_lo + 0.5 * dalpha

        phi_j = line.phi(a_j)
        candidates.offer(a_j, phi_j)
        if phi_j > phi0 + params.c1 * a_j * dphi0 or phi_j >= phi_lo:
            phi_rec, a_rec = phi_hi, a_hi
            a_hi, phi_hi = a_j, phi_j
        else:
            if line.exhausted:
                break
            dphi_j = line.derphi(a_j)
            if abs(dphi_j) <= -params.c2 * dphi0:
                return a_j, phi_j, dphi_j
            if dphi_j * (a_hi - a_lo) >= 0:
                phi_rec, a_rec = phi_hi, a_hi
                a_hi, phi_hi = a_lo, phi_lo
            else:
                phi_rec, a_rec = phi_lo, a_lo
            a_lo, phi_lo, dphi_lo = a_j, phi_j, dphi_j
        i += 1
    return None


def strong_wolfe(
    f: Objective,
    grad: GradientOracle,
    x: np.ndarray,
    p: np.ndarray,
    params: WolfeParams = WolfeParams(),
    *,
    f0: Optional[float] = None,
    g0: Optional[np.ndarray] = None,
) -> LineSearchResult:
    """
    Find a step length satisfying the strong Wolfe conditions.

    Parameters
    ----------
    f : Objective
        Objective function.
    grad : GradientOracle
        Gradient oracle; directional derivatives are full-gradient dot products.
    x, p : np.ndarray
        Current point and a descent direction.
    params : WolfeParams
        Constants and budgets.
    f0, g0 : optional
        f(x) and grad f(x) when already known.

    Returns
    -------
    LineSearchResult
        A certified step, or the best sufficient-decrease step flagged ``weak``
        when the budget or ``alpha_max`` is reached first.

    Raises
    ------
    LineSearchError
        If ``p`` is not a descent direction or no decreasing step was found.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    phi0 = f(x) if f0 is None else float(f0)
    g0 = grad(x) if g0 is None else g0
    dphi0 = float(np.dot(g0, p))
    if not dphi0 < 0:
        raise LineSearchError(f"not a descent direction (p.grad = {dphi0:.3e})")

    line = _LineFunction(f, grad, x, p, params.max_evals)
    candidates = _Candidates(phi0, dphi0, params.c1)

    alpha_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    alpha = min(params.alpha_init, params.alpha_max)
    found: Optional[Tuple[float, float, float]] = None
    first = True
    while not line.exhausted:
        phi_a = line.phi(alpha)
        candidates.offer(alpha, phi_a)
        if phi_a > phi0 + params.c1 * alpha * dphi0 or (not first and phi_a >= phi_prev):
            found = _zoom(line, alpha_prev, alpha, phi_prev, phi_a, dphi_prev, phi0, dphi0, params, candidates)
            break
        if line.exhausted:
            break
        dphi_a = line.derphi(alpha)
        if abs(dphi_a) <= -params.c2 * dphi0:
            found = (alpha, phi_a, dphi_a)
            break
        if dphi_a >= 0:
            found = _zoom(line, alpha, alpha_prev, phi_a, phi_prev, dphi_a, phi0, dphi0, params, candidates)
            break
        if alpha >= params.alpha_max:
            break
        alpha_prev, phi_prev, dphi_prev = alpha, phi_a, dphi_a
        alpha = min(2.0 * alpha, params.alpha_max)
        first = False

    if found is not None:
        a_star, phi_star, dphi_star = found
        if not (
            phi_star <= phi0 + params.c1 * a_star * dphi0
            and abs(dphi_star) <= params.c2 * abs(dphi0)
        ):
            raise LineSearchInternalError(f"step {a_star:.3e} violates the strong Wolfe conditions")
        logger.debug("strong Wolfe step %.3e after %d evaluations", a_star, line.evals)
        return LineSearchResult(a_star, phi_star, line.evals, line.gradients.get(a_star), False)

    if candidates.best is None:
        raise LineSearchError(f"no decreasing step found in {line.evals} evaluations")
    a_best, phi_best = candidates.best
    logger.debug("weak Wolfe step %.3e (budget or alpha_max reached)", a_best)
    return LineSearchResult(a_best, phi_best, line.evals, line.gradients.get(a_best), True)


def armijo_backtracking(
    f: Objective,
    x: np.ndarray,
    p: np.ndarray,
    f0: float,
    dphi0: float,
    *,
    c1: float = 1e-4,
    alpha0: float = 1.0,
    shrink: float = 0.5,
    max_evals: int = 60,
) -> LineSearchResult:
    """Halve alpha until sufficient decrease holds with a strict decrease."""
    if not dphi0 < 0:
        raise LineSearchError(f"not a descent direction (p.grad = {dphi0:.3e})")
    alpha = alpha0
    for evals in range(1, max_evals + 1):
        value = f(x + alpha * p)
        if value < f0 and value <= f0 + c1 * alpha * dphi0:
            return LineSearchResult(alpha, value, evals, None, True)
        alpha *= shrink
    raise LineSearchError(f"Armijo backtracking failed after {max_evals} evaluations")


def search_with_fallback(
    f: Objective,
    grad: GradientOracle,
    x: np.ndarray,
    p: np.ndarray,
    params: WolfeParams,
    *,
    f0: float,
    g0: np.ndarray,
) -> LineSearchResult:
    """Strong Wolfe search, falling back to Armijo backtracking when it fails."""
    try:
        return strong_wolfe(f, grad, x, p, params, f0=f0, g0=g0)
    except LineSearchError as err:
        logger.debug("strong Wolfe search failed (%s); backtracking", err)
        return armijo_backtracking(
            f, x, p, f0, float(np.dot(g0, p)), c1=params.c1, max_evals=params.max_evals
        )
