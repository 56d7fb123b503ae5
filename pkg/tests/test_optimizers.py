"""
Optimizer families and the shared driver.

Groups:
    1. First-order baseline updates
    2. Inner conjugate gradient
    3. VecHGrad, NCG and L-BFGS end to end
    4. Driver stop rules and reports
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import minimize, rosen, rosen_der

from bench.datasets import synthesize_tensor
from bench.runner import TickClock
from decompositions import ModelSpec, init_random, make_objective
from oracles import quadratic, spd_matrix
from solvers.baselines import FirstOrderStepper, baseline_step, init_state
from solvers.config import OptimizerConfig, OptimizerFamily, RunReport, StopReason
from solvers.driver import make_stepper, run_until_convergence, solve
from solvers.errors import DivergenceError, LineSearchError
from solvers.lbfgs import InverseLbfgs, lbfgs_solve
from solvers.ncg import hestenes_stiefel, ncg_solve
from solvers.objective import Objective
from solvers.stepping import StepOutcome
from solvers.vechgrad import cg_inner, vechgrad_solve

ROSENBROCK = Objective(eval=lambda x: float(rosen(x)), dim=2)
ROSENBROCK_START = np.array([-1.2, 1.0])


def _cfg(family, **overrides):
    return OptimizerConfig.for_family(family, **overrides)


# ═══ Group 1: first-order baselines ═══


def test_sgd_step():
    cfg = _cfg("sgd")
    x, state = baseline_step(OptimizerFamily.SGD, init_state(OptimizerFamily.SGD, [1.0]), np.array([2.0]), cfg)
    assert x[0] == pytest.approx(0.9998)
    assert state.t == 1


def test_adam_first_step_has_magnitude_lr():
    cfg = _cfg("adam")
    g = np.array([3.0, -0.02, 1e-3])
    x, _ = baseline_step(OptimizerFamily.ADAM, init_state(OptimizerFamily.ADAM, np.zeros(3)), g, cfg)
    np.testing.assert_allclose(x, -cfg.lr * np.sign(g), rtol=1e-4)


def test_adagrad_step_decays_like_inverse_sqrt():
    cfg = _cfg("adagrad")
    state = init_state(OptimizerFamily.ADAGRAD, np.zeros(1))
    g = np.array([0.5])
    steps = []
    for _ in range(9):
        before = state.x.copy()
        _, state = baseline_step(OptimizerFamily.ADAGRAD, state, g, cfg)
        steps.append(float(before[0] - state.x[0]))
    for t, step in enumerate(steps, start=1):
        assert step == pytest.approx(cfg.lr / np.sqrt(t), rel=1e-6)


def test_nag_velocity_and_lookahead():
    cfg = _cfg("nag")
    state = init_state(OptimizerFamily.NAG, np.array([1.0]))
    x, state = baseline_step(OptimizerFamily.NAG, state, np.array([2.0]), cfg)
    assert state.velocity[0] == pytest.approx(2e-4)
    assert x[0] == pytest.approx(1.0 - 2e-4)
    x, state = baseline_step(OptimizerFamily.NAG, state, np.array([2.0]), cfg)
    assert state.velocity[0] == pytest.approx(0.9 * 2e-4 + 2e-4)


def test_rmsprop_step():
    cfg = _cfg("rmsprop")
    g = np.array([2.0])
    x, state = baseline_step(OptimizerFamily.RMSPROP, init_state(OptimizerFamily.RMSPROP, [0.0]), g, cfg)
    assert state.second_moment[0] == pytest.approx(0.1 * 4.0)
    assert x[0] == pytest.approx(-cfg.lr * 2.0 / np.sqrt(0.4 + cfg.epsilon))


def test_saga_table_and_estimate():
    cfg = _cfg("saga")
    state = init_state(OptimizerFamily.SAGA, np.zeros(2), n_components=2)
    state = replace(state, sample=1, loss=2.0)
    g = np.array([4.0, -8.0])
    x, new_state = baseline_step(OptimizerFamily.SAGA, state, g, cfg)
    np.testing.assert_allclose(new_state.table[1], g)
    np.testing.assert_allclose(new_state.table_sum, g)
    np.testing.assert_allclose(x, -cfg.lr * (2 * g) / (2 * 2.0))
    np.testing.assert_array_equal(state.table, np.zeros((2, 2)))


def test_saga_needs_components():
    with pytest.raises(ValueError):
        init_state(OptimizerFamily.SAGA, np.zeros(2))


def test_baseline_steps_are_deterministic(rng):
    g = rng.standard_normal(4)
    for family in (OptimizerFamily.SGD, OptimizerFamily.ADAM, OptimizerFamily.RMSPROP, OptimizerFamily.ADAGRAD):
        cfg = _cfg(family)
        first, _ = baseline_step(family, init_state(family, np.ones(4)), g, cfg)
        second, _ = baseline_step(family, init_state(family, np.ones(4)), g, cfg)
        np.testing.assert_array_equal(first, second)


def test_first_order_stepper_rejects_other_families():
    with pytest.raises(ValueError):
        FirstOrderStepper(ROSENBROCK, _cfg("lbfgs"))


# ═══ Group 2: inner conjugate gradient ═══


def test_cg_identity_system():
    g = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(cg_inner(g, lambda v: v, 10, 1e-12), -g)
    np.testing.assert_allclose(cg_inner(g, lambda v: v, 10, 1.0), -g)


def test_cg_zero_gradient():
    np.testing.assert_array_equal(cg_inner(np.zeros(3), lambda v: v), np.zeros(3))


def test_cg_solves_spd_system(rng):
    h = spd_matrix(rng, 5)
    g = rng.standard_normal(5)
    p = cg_inner(g, lambda v: h @ v, cg_max_iter=5, sigma=1e-12)
    assert np.linalg.norm(h @ p + g) <= 1e-10 * max(1.0, np.linalg.norm(g))
    np.testing.assert_allclose(p, np.linalg.solve(h, -g), rtol=1e-8)


def test_cg_negative_curvature_falls_back_to_steepest_descent():
    g = np.array([1.0, 1.0])
    np.testing.assert_array_equal(cg_inner(g, lambda v: -v), -g)


def test_cg_non_finite_product_falls_back():
    g = np.array([1.0, 2.0])
    np.testing.assert_array_equal(cg_inner(g, lambda v: np.full_like(v, np.nan)), -g)


def test_cg_stops_before_indefinite_direction():
    h = np.diag([1.0, -1.0])
    g = np.array([1.0, 1.0])
    p = cg_inner(g, lambda v: h @ v, cg_max_iter=5, sigma=1e-12)
    assert float(p @ g) < 0
    assert np.all(np.isfinite(p))


# ═══ Group 3: VecHGrad, NCG, L-BFGS ═══


def test_vechgrad_newton_on_quadratic(rng):
    for _ in range(3):
        a = spd_matrix(rng, 10)
        f, x_star = quadratic(a, rng.standard_normal(10))
        cfg = _cfg("vechgrad", cg_max_iter=10, cg_sigma=1e-10, eps1=-np.inf, decrease_tol=0.0)
        x, report = vechgrad_solve(f, rng.standard_normal(10), cfg)
        assert report.iterations <= 5
        assert report.stop_reason is StopReason.GRAD_BELOW_EPS2
        assert np.linalg.norm(x - x_star) <= 1e-4


def test_vechgrad_returns_immediately_below_eps1():
    f = Objective(eval=lambda x: float(x @ x), dim=2)
    x, report = vechgrad_solve(f, np.array([0.1, 0.1]), _cfg("vechgrad", eps1=1.0))
    assert report.iterations == 0
    assert report.stop_reason is StopReason.LOSS_BELOW_EPS1
    np.testing.assert_array_equal(x, [0.1, 0.1])


def test_vechgrad_on_exact_cp_tensor():
    target, _ = synthesize_tensor((4, 4, 4), "cp", 2, seed=11)
    spec = ModelSpec.cp((4, 4, 4), 2)
    x0 = init_random(spec, 0)
    x, report = vechgrad_solve(make_objective(spec, target), x0, _cfg("vechgrad"))
    assert report.final_loss <= 1.0
    assert report.stop_reason is StopReason.LOSS_BELOW_EPS1
    assert x.spec == spec
    assert all(b < a for a, b in zip(report.loss_history, report.loss_history[1:]))


def test_solvers_reject_foreign_configs():
    f, _ = quadratic(np.eye(2), np.ones(2))
    with pytest.raises(ValueError):
        vechgrad_solve(f, np.zeros(2), _cfg("ncg"))
    with pytest.raises(ValueError):
        ncg_solve(f, np.zeros(2), _cfg("lbfgs"))
    with pytest.raises(ValueError):
        lbfgs_solve(f, np.zeros(2), _cfg("vechgrad"))


def test_hestenes_stiefel_formula():
    g, g_prev, d_prev = np.array([1.0, 2.0]), np.array([0.5, 1.0]), np.array([-1.0, 1.0])
    y = g - g_prev
    assert hestenes_stiefel(g, g_prev, d_prev) == pytest.approx((g @ y) / (d_prev @ y))
    assert hestenes_stiefel(g, g, d_prev) == 0.0


@pytest.mark.parametrize("solver, family", [(ncg_solve, "ncg"), (lbfgs_solve, "lbfgs")])
def test_quasi_newton_methods_on_quadratic(rng, solver, family):
    d = 5
    a = spd_matrix(rng, d, 3.0, 10.0)
    f, x_star = quadratic(a, rng.standard_normal(d))
    cfg = _cfg(family, eps1=-np.inf, eps2=1e-8, decrease_tol=0.0)
    x, report = solver(f, np.zeros(d), cfg)
    assert report.stop_reason is StopReason.GRAD_BELOW_EPS2
    limit = d + 2 if family == "ncg" else 50
    assert report.iterations <= limit
    np.testing.assert_allclose(x, x_star, atol=1e-6)


@pytest.mark.parametrize("solver, family", [(ncg_solve, "ncg"), (lbfgs_solve, "lbfgs")])
def test_quasi_newton_methods_on_rosenbrock(solver, family):
    cfg = _cfg(family, eps1=1e-6, eps2=1e-12, decrease_tol=0.0, max_iter=200)
    x, report = solver(ROSENBROCK, ROSENBROCK_START, cfg)
    assert report.final_loss <= 1e-6
    assert report.stop_reason is StopReason.LOSS_BELOW_EPS1
    method = "CG" if family == "ncg" else "L-BFGS-B"
    reference = minimize(rosen, ROSENBROCK_START, jac=rosen_der, method=method)
    np.testing.assert_allclose(x, reference.x, atol=1e-2)


@pytest.mark.parametrize("solver, family", [(ncg_solve, "ncg"), (lbfgs_solve, "lbfgs")])
def test_zero_gradient_stops_immediately(solver, family):
    f = Objective(eval=lambda x: float(x @ x), dim=3)
    _, report = solver(f, np.zeros(3), _cfg(family, eps1=-np.inf))
    assert report.iterations == 0
    assert report.stop_reason is StopReason.GRAD_BELOW_EPS2


def test_lbfgs_memory_rejects_bad_pairs_and_keeps_m():
    memory = InverseLbfgs(2)
    assert not memory.store(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    assert not memory.store(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    for scale in (1.0, 2.0, 3.0):
        assert memory.store(np.array([scale, 0.0]), np.array([scale, scale * 0.1]))
    assert len(memory) == 2


def test_lbfgs_two_loop_matches_inverse_on_quadratic(rng):
    a = spd_matrix(rng, 3)
    memory = InverseLbfgs(3)
    # eigenvectors are A-conjugate, so three pairs pin down the inverse exactly
    for s in np.linalg.eigh(a)[1].T:
        memory.store(s, a @ s)
    v = rng.standard_normal(3)
    np.testing.assert_allclose(memory.matvec(v), np.linalg.solve(a, v), rtol=1e-8)


# ═══ Group 4: driver ═══


def test_max_iter_zero_returns_start():
    f = Objective(eval=lambda x: float(x @ x), dim=2)
    x, report = solve(f, np.ones(2), _cfg("sgd", max_iter=0))
    assert report.stop_reason is StopReason.MAX_ITER
    assert report.iterations == 0
    assert report.loss_history == [2.0]
    np.testing.assert_array_equal(x, np.ones(2))


def test_constant_objective_stops_on_small_decrease():
    f = Objective(eval=lambda x: 3.0, dim=2)
    report = run_until_convergence(f, np.ones(2), _cfg("sgd"))
    assert report.stop_reason is StopReason.SMALL_DECREASE
    assert report.iterations == 1


class _ScriptedStepper:
    """Returns a fixed sequence of losses, or raises a given error."""

    def __init__(self, losses=(), error=None):
        self.losses = iter(losses)
        self.error = error

    def step(self, x, fx, grad):
        if self.error is not None:
            raise self.error
        return StepOutcome(x, next(self.losses))


def test_increase_does_not_stop_the_run():
    f = Objective(eval=lambda x: 0.0, dim=1)
    stepper = _ScriptedStepper(losses=[1.0, 2.0, 3.0])
    report = run_until_convergence(f, np.zeros(1), _cfg("sgd", max_iter=3), stepper=stepper)
    assert report.stop_reason is StopReason.MAX_ITER
    assert report.loss_history == [0.0, 1.0, 2.0, 3.0]


def test_non_finite_loss_is_diverged():
    f = Objective(eval=lambda x: float("nan"), dim=1)
    report = run_until_convergence(f, np.zeros(1), _cfg("sgd"))
    assert report.stop_reason is StopReason.DIVERGED
    assert report.iterations == 0


@pytest.mark.parametrize(
    "error, reason",
    [(LineSearchError("no step"), StopReason.LINE_SEARCH_FAIL), (DivergenceError("nan"), StopReason.DIVERGED)],
)
def test_step_errors_become_stop_reasons(error, reason):
    f = Objective(eval=lambda x: 1.0, dim=1)
    report = run_until_convergence(f, np.zeros(1), _cfg("sgd"), stepper=_ScriptedStepper(error=error))
    assert report.stop_reason is reason
    assert report.message == str(error)
    assert report.loss_history == [1.0]


def test_non_finite_step_is_diverged():
    f = Objective(eval=lambda x: 1.0, dim=1)
    stepper = _ScriptedStepper(losses=[float("inf")])
    report = run_until_convergence(f, np.zeros(1), _cfg("sgd"), stepper=stepper)
    assert report.stop_reason is StopReason.DIVERGED
    assert report.iterations == 0


def test_fake_clock_times_the_run():
    f = Objective(eval=lambda x: float(x @ x), dim=1)
    report = run_until_convergence(f, np.array([1.0]), _cfg("sgd", max_iter=2), TickClock(0.5))
    assert report.wall_time_seconds == 0.5


def test_report_history_invariant():
    with pytest.raises(ValueError):
        RunReport(loss_history=[1.0], final_loss=1.0, iterations=1, wall_time_seconds=0.0, stop_reason=StopReason.MAX_ITER)


def test_make_stepper_refuses_als():
    with pytest.raises(ValueError):
        make_stepper(ROSENBROCK, _cfg("als"))


def test_config_defaults_and_overrides():
    cfg = _cfg("adam")
    assert (cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.max_iter) == (1e-3, 0.9, 0.999, 1e-8, 10_000)
    assert _cfg("vechgrad").max_iter == 1_000
    assert _cfg("als").max_iter == 100_000
    assert _cfg("ncg").wolfe.c2 == 0.1
    assert cfg.with_overrides(lr=0.5).lr == 0.5
    assert OptimizerConfig.from_dict({"family": "l-bfgs", "history": 5}).history == 5
    with pytest.raises(ValueError):
        OptimizerConfig.from_dict({"family": "sgd", "learning_rate": 1.0})
    with pytest.raises(ValueError):
        _cfg("newton")
