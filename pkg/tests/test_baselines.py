import math

import numpy as np
import pytest

from dinnlab.baselines import (
    BadStartError,
    GaussNewtonConfig,
    LsqProblem,
    NelderMeadConfig,
    StallError,
    gauss_newton,
    least_squares_gn,
    minimize_simplex,
    nelder_mead,
    objective,
    residual_vector,
)
from dinnlab.dataset import NoiseSpec, synthesize
from dinnlab.integrate import IntegratorConfig
from dinnlab.models import registry_get

BOUNDS3 = ((0.0, 2.0), (0.0, 2.0), (0.0, 2.0))
TRUE = np.array([0.191, 0.05, 0.0294])


def sird_problem(n_points=200, x0=(0.1, 0.1, 0.1), noise=0.0):
    m = registry_get("covid_sird")
    ds = synthesize(m, m.true_params(), m.default_y0, n_points, m.horizon,
                    NoiseSpec(level=noise, seed=0))
    return LsqProblem(
        model=m, ds=ds, free_params=("alpha", "beta", "gamma"),
        x0=np.asarray(x0), bounds=BOUNDS3,
    )


# -- solver cores on synthetic objectives ------------------------------------

def test_simplex_minimizes_quadratic_bowl():
    center = np.array([0.3, -0.7, 1.1])
    bounds = ((-2.0, 2.0),) * 3
    res = minimize_simplex(lambda x: float(np.sum((x - center) ** 2)),
                           np.zeros(3), bounds)
    assert res.converged
    assert np.max(np.abs(res.x - center)) < 1e-6


def test_simplex_respects_bounds():
    center = np.array([5.0, 5.0])  # outside the box
    bounds = ((0.0, 1.0), (0.0, 1.0))
    res = minimize_simplex(lambda x: float(np.sum((x - center) ** 2)),
                           np.array([0.5, 0.5]), bounds)
    assert np.all(res.x <= 1.0) and np.all(res.x >= 0.0)
    assert np.max(np.abs(res.x - 1.0)) < 1e-6


def test_simplex_history_is_monotone():
    center = np.array([0.2, 0.4, -0.1])
    res = minimize_simplex(lambda x: float(np.sum((x - center) ** 2)),
                           np.ones(3), ((-2.0, 2.0),) * 3)
    assert all(b <= a + 1e-15 for a, b in zip(res.history, res.history[1:]))


def test_gn_linear_residuals_one_step():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(8, 3))
    b = rng.normal(size=8)
    x_opt, sse_opt, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = least_squares_gn(lambda x: A @ x - b, np.zeros(3), ((-10.0, 10.0),) * 3,
                           GaussNewtonConfig(damped=False))
    # exact for linear residuals up to the finite-difference Jacobian error
    assert np.max(np.abs(res.x - x_opt)) < 1e-6
    # the first Gauss-Newton step already attains the least-squares optimum
    assert res.history[1] == pytest.approx(float(sse_opt[0]), rel=1e-9)


def test_gn_damped_history_is_monotone():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(10, 3))
    b = rng.normal(size=10)
    res = least_squares_gn(lambda x: np.tanh(A @ x) - b, np.full(3, 0.4),
                           ((-5.0, 5.0),) * 3)
    assert all(b2 <= a2 + 1e-15 for a2, b2 in zip(res.history, res.history[1:]))


def test_gn_pure_mode_raises_on_singular_system():
    # residual ignores the second coordinate: J^T J is singular
    with pytest.raises(StallError) as err:
        least_squares_gn(
            lambda x: np.array([x[0] - 1.0, 2.0 * x[0]]),
            np.zeros(2), ((-5.0, 5.0),) * 2,
            GaussNewtonConfig(damped=False),
        )
    assert err.value.x_best is not None


def test_gn_damped_survives_singular_system():
    res = least_squares_gn(
        lambda x: np.array([x[0] - 1.0, 2.0 * x[0]]),
        np.zeros(2), ((-5.0, 5.0),) * 2,
    )
    assert math.isfinite(res.sse)


# -- trajectory-fitting wrappers ----------------------------------------------

def test_objective_zero_at_truth():
    prob = sird_problem(n_points=60)
    assert objective(prob, TRUE) == 0.0  # same integrator and grid as the data
    r = residual_vector(prob, TRUE)
    assert r.size == 60 * 4
    assert np.all(r == 0.0)


def test_start_at_truth_converges_immediately():
    prob = sird_problem(n_points=60, x0=TRUE)
    res = nelder_mead(prob)
    assert res.sse < 1e-8
    res_gn = gauss_newton(prob)
    assert res_gn.sse < 1e-8
    assert res_gn.iterations <= 2


def test_both_methods_recover_sird_parameters():
    prob = sird_problem(n_points=200)
    nm = nelder_mead(prob)
    assert np.max(np.abs(nm.x - TRUE) / TRUE) < 0.01
    gn = gauss_newton(prob)
    assert np.max(np.abs(gn.x - TRUE) / TRUE) < 0.01
    assert gn.sse < 1e-8 and nm.sse < 1e-6


def test_solvers_are_deterministic():
    prob = sird_problem(n_points=80)
    a = nelder_mead(prob)
    b = nelder_mead(prob)
    assert a.x.tobytes() == b.x.tobytes() and a.sse == b.sse
    c = gauss_newton(prob)
    d = gauss_newton(prob)
    assert c.x.tobytes() == d.x.tobytes() and c.sse == d.sse


def test_bad_start_detected():
    m = registry_get("covid_sird")
    ds = synthesize(m, m.true_params(), m.default_y0, 30, m.horizon, NoiseSpec())
    prob = LsqProblem(
        model=m, ds=ds, free_params=("alpha", "beta", "gamma"),
        x0=np.array([0.1, 0.1, 0.1]), bounds=BOUNDS3,
        integrator=IntegratorConfig(max_steps=3),  # guarantees integration failure
    )
    with pytest.raises(BadStartError):
        nelder_mead(prob)
    with pytest.raises(BadStartError):
        gauss_newton(prob)


def test_masked_problem_uses_only_observed_entries():
    from dinnlab.dataset import mask_compartments

    m = registry_get("covid_sird")
    ds = synthesize(m, m.true_params(), m.default_y0, 30, m.horizon, NoiseSpec())
    masked = mask_compartments(ds, {"S", "D", "R"}, m)
    prob = LsqProblem(
        model=m, ds=masked, free_params=("alpha", "beta", "gamma"),
        x0=np.array([0.1, 0.1, 0.1]), bounds=BOUNDS3,
    )
    r = residual_vector(prob, TRUE)
    # 30 infected rows plus one t0 row per hidden compartment
    assert r.size == 30 + 3


def test_problem_validation():
    m = registry_get("covid_sird")
    ds = synthesize(m, m.true_params(), m.default_y0, 10, m.horizon, NoiseSpec())
    with pytest.raises(ValueError):
        LsqProblem(model=m, ds=ds, free_params=("alpha",), x0=np.array([0.1, 0.2]),
                   bounds=((0.0, 2.0),))
    with pytest.raises(ValueError):
        LsqProblem(model=m, ds=ds, free_params=("alpha",), x0=np.array([5.0]),
                   bounds=((0.0, 2.0),))


def test_found_params_includes_fixed():
    m = registry_get("covid_sird")
    ds = synthesize(m, m.true_params(), m.default_y0, 10, m.horizon, NoiseSpec())
    prob = LsqProblem(
        model=m, ds=ds, free_params=("alpha", "beta"), x0=np.array([0.1, 0.1]),
        bounds=((0.0, 2.0),) * 2, fixed={"gamma": 0.0294},
    )
    res = gauss_newton(prob)
    found = res.found_params(prob)
    assert found["gamma"] == 0.0294
    assert set(found) == {"alpha", "beta", "gamma"}
