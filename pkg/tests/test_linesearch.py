"""
Strong Wolfe line search and the Armijo fallback.

Groups:
    1. Hand-checked one-dimensional cases
    2. Certification of accepted steps on random problems
    3. Armijo backtracking and the fallback chain
"""

import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from oracles import spd_matrix
from solvers.errors import LineSearchError
from solvers.linesearch import WolfeParams, armijo_backtracking, search_with_fallback, strong_wolfe
from solvers.objective import Objective


def _square():
    return Objective(eval=lambda x: float(x[0] ** 2), dim=1), lambda x: 2.0 * x


# ═══ Group 1: hand-checked cases ═══


def test_square_lands_on_minimizer():
    f, grad = _square()
    result = strong_wolfe(f, grad, np.array([1.0]), np.array([-2.0]))
    assert result.alpha == pytest.approx(0.5)
    assert result.f_new == pytest.approx(0.0, abs=1e-15)
    assert not result.weak
    alpha, f_new, evals = result
    assert evals == result.evals


def test_linear_function_is_capped_by_alpha_max():
    f = Objective(eval=lambda x: float(-x[0]), dim=1)
    params = WolfeParams(alpha_max=1000.0)
    result = strong_wolfe(f, lambda x: np.array([-1.0]), np.array([0.0]), np.array([1.0]), params)
    assert result.weak
    assert result.alpha == pytest.approx(1000.0)
    assert result.f_new == pytest.approx(-1000.0)


def test_ascent_direction_is_rejected():
    f, grad = _square()
    with pytest.raises(LineSearchError):
        strong_wolfe(f, grad, np.array([1.0]), np.array([1.0]))


@pytest.mark.parametrize(
    "kwargs", [{"c1": 0.9, "c2": 0.1}, {"c1": 0.0}, {"c2": 1.0}, {"alpha_init": 0.0}, {"max_evals": 0}]
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        WolfeParams(**kwargs)


# ═══ Group 2: certification ═══


def _problem(rng, kind, d):
    if kind == 0:
        a, b = spd_matrix(rng, d, 0.5, 20.0), rng.standard_normal(d)
        return (
            Objective(eval=lambda x: 0.5 * float(x @ a @ x) - float(b @ x), dim=d),
            lambda x: a @ x - b,
        )
    if kind == 1:
        return Objective(eval=lambda x: float(rosen(x)), dim=d), rosen_der
    c = rng.standard_normal((4, d))

    def evaluate(x):
        return float(np.log(np.exp(c @ x).sum()) + 0.05 * x @ x)

    def gradient(x):
        w = np.exp(c @ x)
        return c.T @ (w / w.sum()) + 0.1 * x

    return Objective(eval=evaluate, dim=d), gradient


def test_accepted_steps_satisfy_wolfe_conditions(rng):
    params = WolfeParams(c1=1e-4, c2=0.9)
    for case in range(50):
        d = int(rng.integers(2, 6))
        f, grad = _problem(rng, case % 3, d)
        x = rng.standard_normal(d)
        g0 = grad(x)
        p = -g0 + 0.3 * np.linalg.norm(g0) * rng.standard_normal(d) / np.sqrt(d)
        if p @ g0 >= 0:
            p = -g0
        f0, dphi0 = f(x), float(g0 @ p)

        result = strong_wolfe(f, grad, x, p, params)
        f_new = f(x + result.alpha * p)
        assert f_new == pytest.approx(result.f_new, rel=1e-12, abs=1e-12)
        assert f_new <= f0 + params.c1 * result.alpha * dphi0
        if not result.weak:
            assert abs(float(grad(x + result.alpha * p) @ p)) <= params.c2 * abs(dphi0)
        else:
            assert f_new < f0


def test_tighter_curvature_constant_is_honoured(rng):
    f, grad = _problem(rng, 1, 2)
    x = np.array([-1.2, 1.0])
    p = -grad(x)
    result = strong_wolfe(f, grad, x, p, WolfeParams(c2=0.1))
    assert not result.weak
    assert abs(float(grad(x + result.alpha * p) @ p)) <= 0.1 * abs(float(grad(x) @ p))


# ═══ Group 3: Armijo and fallback ═══


def test_armijo_halves_until_decrease():
    f, _ = _square()
    result = armijo_backtracking(f, np.array([1.0]), np.array([-10.0]), 1.0, -20.0)
    assert result.alpha == pytest.approx(0.125)
    assert result.evals == 4
    assert result.weak


def test_armijo_rejects_ascent():
    f, _ = _square()
    with pytest.raises(LineSearchError):
        armijo_backtracking(f, np.array([1.0]), np.array([1.0]), 1.0, 2.0)


def test_fallback_returns_the_wolfe_step_when_it_succeeds():
    f, grad = _square()
    x, p = np.array([1.0]), np.array([-2.0])
    result = search_with_fallback(f, grad, x, p, WolfeParams(), f0=1.0, g0=grad(x))
    assert result.alpha == pytest.approx(0.5)


def test_fallback_raises_when_both_searches_fail():
    f, grad = _square()
    x, p = np.array([1.0]), np.array([-1e6])
    with pytest.raises(LineSearchError):
        search_with_fallback(f, grad, x, p, WolfeParams(max_evals=2), f0=1.0, g0=grad(x))
