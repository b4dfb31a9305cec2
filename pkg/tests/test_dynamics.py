import numpy as np
import pytest

from dsmpc.dynamics import (
    DynamicsKind,
    DynamicsModel,
    clamp_controls,
    control_names,
    nominal_control,
    positions,
    state_names,
    step,
    step_unchecked,
)


def di(dt=0.1, **kw):
    return DynamicsModel(DynamicsKind.DOUBLE_INTEGRATOR_2D, dt=dt, **kw)


def dubins(dt=0.1, **kw):
    return DynamicsModel(DynamicsKind.DUBINS, dt=dt, **kw)


def quad(dt=0.02, **kw):
    return DynamicsModel(DynamicsKind.QUADCOPTER12, dt=dt, **kw)


def test_double_integrator_coasts():
    x = step(di(), np.array([0.0, 0.0, 1.0, 0.0]), np.zeros(2))
    assert np.allclose(x, [0.1, 0.0, 1.0, 0.0])


def test_dubins_heading_north():
    x = step(dubins(dt=0.5), np.array([0.0, 0.0, np.pi / 2]), np.array([2.0, 0.0]))
    assert x[1] == pytest.approx(1.0)
    assert x[0] == pytest.approx(0.0, abs=1e-12)
    assert x[2] == pytest.approx(np.pi / 2)


def test_quadcopter_hover_is_fixed_point():
    model = quad()
    x = np.zeros(12)
    u = np.array([model.mass * model.gravity, 0.0, 0.0, 0.0])
    assert np.abs(step(model, x, u) - x).max() < 1e-9
    rk4 = DynamicsModel(DynamicsKind.QUADCOPTER12, dt=0.02, integrator="rk4")
    assert np.abs(step(rk4, x, u) - x).max() < 1e-9


def test_quadcopter_free_fall_direction():
    model = quad()
    x = step(model, np.zeros(12), np.zeros(4))
    assert x[5] < 0  # vertical velocity decreases under gravity


def test_control_clamping_is_part_of_step():
    model = di(control_limits=np.array([[-1.0, 1.0], [-1.0, 1.0]]))
    x = step(model, np.zeros(4), np.array([100.0, -100.0]))
    assert np.allclose(x[2:], [0.1, -0.1])
    assert np.allclose(clamp_controls(model, [5.0, 0.0]), [1.0, 0.0])


def test_step_rejects_non_finite():
    with pytest.raises(ValueError):
        step(di(), np.array([np.nan, 0, 0, 0]), np.zeros(2))
    with pytest.raises(ValueError):
        step(di(), np.zeros(4), np.array([np.inf, 0.0]))


def test_step_unchecked_propagates_nan():
    out = step_unchecked(di(), np.array([np.nan, 0, 0, 0]), np.zeros(2))
    assert np.isnan(out[0])


def test_batched_step_matches_loop():
    model = dubins()
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(7, 3))
    us = rng.normal(size=(7, 2))
    batched = step_unchecked(model, xs, us)
    for i in range(7):
        assert np.allclose(batched[i], step(model, xs[i], us[i]))


@pytest.mark.parametrize("model", [di(), dubins(), quad()], ids=lambda m: m.kind.value)
def test_finite_difference_jacobian_exists(model):
    rng = np.random.default_rng(1)
    x = 0.1 * rng.normal(size=model.n_x)
    u = 0.1 * rng.normal(size=model.n_u)
    if model.kind is DynamicsKind.QUADCOPTER12:
        u[0] += model.mass * model.gravity
    eps = 1e-6
    jac = np.empty((model.n_x, model.n_x))
    for k in range(model.n_x):
        dx = np.zeros(model.n_x)
        dx[k] = eps
        jac[:, k] = (step(model, x + dx, u) - step(model, x - dx, u)) / (2 * eps)
    assert np.all(np.isfinite(jac))
    # explicit Euler: d step / dx = I + dt * df/dx, bounded near the origin
    assert np.abs(jac).max() < 10.0


def test_rk4_close_to_euler_at_small_dt():
    euler = quad(dt=0.001)
    rk4 = DynamicsModel(DynamicsKind.QUADCOPTER12, dt=0.001, integrator="rk4")
    rng = np.random.default_rng(2)
    x = 0.05 * rng.normal(size=12)
    u = np.array([9.81, 0.001, -0.001, 0.0])
    assert np.abs(step(euler, x, u) - step(rk4, x, u)).max() < 1e-5


def test_names_and_nominal():
    assert state_names(di()) == ["px", "py", "vx", "vy"]
    assert control_names(dubins()) == ["speed", "turn_rate"]
    assert len(state_names(quad())) == 12
    model = quad()
    assert nominal_control(model)[0] == pytest.approx(model.mass * model.gravity)
    assert np.allclose(nominal_control(di()), 0.0)


def test_positions_dimensions():
    assert positions(di(), np.arange(4.0)).shape == (2,)
    assert positions(quad(), np.arange(12.0)).shape == (3,)


def test_model_validation():
    with pytest.raises(ValueError):
        DynamicsModel(DynamicsKind.DUBINS, dt=0.0)
    with pytest.raises(ValueError):
        DynamicsModel(DynamicsKind.DUBINS, control_limits=np.array([[1.0, -1.0], [0, 1]]))
    with pytest.raises(ValueError):
        DynamicsModel(DynamicsKind.DUBINS, integrator="verlet")
