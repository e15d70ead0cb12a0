import math

import numpy as np
import pytest

from dinnlab.integrate import (
    BlowUpError,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    final_state,
    integrate,
    rk4_fixed,
)
from dinnlab.models import CompartmentModel, registry_get


def scalar_model(name, fn):
    return CompartmentModel(
        name=name, compartments=("y",), params=(), rhs=fn,
        default_y0=(1.0,), horizon=1.0,
    )


DECAY = scalar_model("decay", lambda t, y, p: [-y[0]])
SQUARE = scalar_model("square", lambda t, y, p: [y[0] * y[0]])


def test_exponential_decay_matches_analytic():
    traj = integrate(DECAY, {}, (1.0,), [0.0, 1.0])
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1.0), rel=1e-8)


def test_sir_with_transmission_off_decays_linearly():
    m = registry_get("sir")
    traj = integrate(m, {"beta": 0.0, "alpha": 0.1}, (990.0, 10.0, 0.0), [0.0, 10.0])
    assert traj.states[-1, 1] == pytest.approx(10.0 * math.exp(-1.0), rel=1e-8)
    assert traj.states[-1, 0] == pytest.approx(990.0, rel=1e-12)


def test_sird_matches_rk4_oracle():
    m = registry_get("covid_sird")
    p = m.true_params()
    grid = np.linspace(0.0, 100.0, 51)
    adaptive = integrate(m, p, m.default_y0, grid)
    oracle = rk4_fixed(m, p, m.default_y0, grid, h=1e-3)
    scale = np.abs(oracle.states).max(axis=0)
    assert np.max(np.abs(adaptive.states - oracle.states) / scale) < 1e-6


def test_dense_output_grid_independence():
    # values at shared times must not depend on the other grid points
    m = registry_get("sir")
    p = m.true_params()
    coarse = integrate(m, p, m.default_y0, np.linspace(0.0, 50.0, 6))
    fine = integrate(m, p, m.default_y0, np.linspace(0.0, 50.0, 101))
    shared = fine.states[::20]
    assert np.allclose(shared, coarse.states, rtol=1e-7, atol=1e-9)


def test_final_state_zero_interval_returns_y0():
    m = registry_get("sir")
    y = final_state(m, {"beta": 0.0, "alpha": 0.1}, (990.0, 10.0, 0.0), 0.0)
    assert np.array_equal(y, [990.0, 10.0, 0.0])


def test_sird_epidemic_burns_out():
    m = registry_get("covid_sird")
    y = final_state(m, m.true_params(), m.default_y0, 500.0)
    assert abs(y[1]) < 1e-10 * 1e3  # infected extinct to within abs_tol * 1e3


def test_measles_defaults_finite_at_one_day():
    m = registry_get("measles")
    y = final_state(m, m.true_params(), m.default_y0, 1.0)
    assert np.all(np.isfinite(y))


def test_conservation_transport():
    for name in ("sir", "covid_sird", "ebola", "polio"):
        m = registry_get(name)
        grid = np.linspace(0.0, m.horizon, 41)
        traj = integrate(m, m.true_params(), m.default_y0, grid)
        totals = traj.states.sum(axis=1)
        assert np.max(np.abs(totals - totals[0])) <= 1e-6 * totals[0], name


def test_tolerance_refinement_converges():
    m = registry_get("covid_sird")
    p = m.true_params()
    grid = np.linspace(0.0, 200.0, 21)
    coarse = integrate(m, p, m.default_y0, grid, IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9))
    fine = integrate(m, p, m.default_y0, grid, IntegratorConfig(rel_tol=5e-7, abs_tol=1e-9))
    scale = np.abs(fine.states).max(axis=0)
    assert np.max(np.abs(coarse.states - fine.states) / scale) < 1e-6


def test_integration_is_deterministic():
    m = registry_get("zika")
    grid = np.linspace(0.0, m.horizon, 31)
    a = integrate(m, m.true_params(), m.default_y0, grid)
    b = integrate(m, m.true_params(), m.default_y0, grid)
    assert a.states.tobytes() == b.states.tobytes()


def test_step_budget_exhaustion_reports_last_time():
    m = registry_get("covid_sird")
    with pytest.raises(IntegrationError) as err:
        integrate(m, m.true_params(), m.default_y0, [0.0, 500.0],
                  IntegratorConfig(max_steps=5))
    assert err.value.t_last is not None
    assert 0.0 <= err.value.t_last < 500.0
    assert not isinstance(err.value, BlowUpError)


def test_blow_up_detected_before_singularity():
    with pytest.raises(BlowUpError) as err:
        integrate(SQUARE, {}, (1.0,), [0.0, 2.0], IntegratorConfig(max_steps=10**7))
    # dy/dt = y^2 from 1 blows up at t = 1; detection lands at the singularity
    assert err.value.t_last == pytest.approx(1.0, abs=1e-6)
    assert err.value.t_last < 1.001


def test_grid_validation():
    m = registry_get("sir")
    with pytest.raises(ValueError):
        integrate(m, m.true_params(), m.default_y0, [])
    with pytest.raises(ValueError):
        integrate(m, m.true_params(), m.default_y0, [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        integrate(m, m.true_params(), (1.0, 2.0), [0.0, 1.0])


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(times=[0.0, 1.0], states=np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Trajectory(times=[0.0, 0.0], states=np.zeros((2, 2)))


def test_trajectory_csv_round_trip(tmp_path):
    m = registry_get("covid_sird")
    grid = np.linspace(0.0, 123.0, 17)
    traj = integrate(m, m.true_params(), m.default_y0, grid)
    path = tmp_path / "traj.csv"
    traj.to_csv(path, compartments=m.compartments)
    header = path.read_text().splitlines()[0]
    assert header == "t,S,I,D,R"
    back = Trajectory.from_csv(path, model_name=m.name)
    # 17 significant digits round-trips doubles exactly
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)


def test_rk4_substep_never_exceeds_h():
    # one long interval is split into uniform substeps
    traj = rk4_fixed(DECAY, {}, (1.0,), [0.0, 1.0], h=1e-3)
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1.0), rel=1e-10)
