# -*- coding: utf-8 -*-

import pytest
from hypothesis import given, strategies as st
import numpy as np

from ccstat.dynamics import (
    CwhParameters,
    LtiSystem,
    build_cwh,
    concatenate,
    cwh_transition,
    mean_motion,
    propagate_mean,
    simulate,
)
from ccstat.errors import DomainError, StructuralError


@st.composite
def random_systems(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 4))
    horizon = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2 ** 32 - 1))

    rng = np.random.default_rng(seed)
    system = LtiSystem(A=rng.normal(scale=0.5, size=(n, n)), B=rng.normal(size=(n, m)))

    return system, horizon, rng


@given(random_systems())
def test_concatenation_matches_recursion(case):
    system, horizon, rng = case
    n, m = system.n, system.m

    x0 = rng.normal(size=n)
    inputs = rng.normal(size=horizon * m)
    disturbances = rng.normal(size=horizon * n)

    states = simulate(system, x0, inputs, disturbances)
    dynamics = concatenate(system, horizon)

    for k in range(horizon + 1):
        stacked = propagate_mean(dynamics, x0, inputs, disturbances, k)
        scale = max(1.0, float(np.abs(states[k]).max()))
        np.testing.assert_allclose(stacked, states[k], rtol=1e-10, atol=1e-10 * scale)


def test_identity_dynamics_maps():
    system = LtiSystem(A=np.eye(2), B=np.eye(2))
    dynamics = concatenate(system, 2)

    np.testing.assert_array_equal(dynamics.input_map(1), np.hstack([np.eye(2), np.zeros((2, 2))]))
    np.testing.assert_array_equal(dynamics.disturbance_map(1), np.hstack([np.eye(2), np.zeros((2, 2))]))


def test_trailing_blocks_are_zero(double_integrator):
    horizon = 4
    dynamics = concatenate(double_integrator, horizon)
    n, m = double_integrator.n, double_integrator.m

    for k in range(1, horizon + 1):
        c = dynamics.input_map(k)
        d = dynamics.disturbance_map(k)

        assert c.shape == (n, horizon * m)
        assert d.shape == (n, horizon * n)
        assert not np.any(c[:, k * m:])
        assert not np.any(d[:, k * n:])
        np.testing.assert_array_equal(d[:, (k - 1) * n:k * n], np.eye(n))


def test_nilpotent_system_keeps_latest_disturbance():
    system = LtiSystem(A=np.zeros((2, 2)), B=np.ones((2, 1)))
    horizon = 3
    d = concatenate(system, horizon).disturbance_map(horizon)

    expected = np.zeros((2, 6))
    expected[:, 4:] = np.eye(2)
    np.testing.assert_array_equal(d, expected)


def test_propagate_mean_trivial_cases(double_integrator):
    dynamics = concatenate(double_integrator, 3)
    x0 = np.array([1.0, -2.0])

    np.testing.assert_allclose(propagate_mean(dynamics, x0, np.zeros(3), np.zeros(6), 2),
                               np.linalg.matrix_power(double_integrator.A, 2) @ x0)

    scalar = concatenate(LtiSystem(A=[[1.0]], B=[[1.0]]), 1)
    assert propagate_mean(scalar, [0.0], [0.3], [0.2], 1)[0] == pytest.approx(0.5)


def test_step_out_of_range(double_integrator):
    dynamics = concatenate(double_integrator, 2)

    with pytest.raises(DomainError):
        dynamics.input_map(0)
    with pytest.raises(DomainError):
        dynamics.disturbance_map(3)
    with pytest.raises(DomainError):
        concatenate(double_integrator, 0)


def test_system_shapes_are_checked():
    with pytest.raises(ValueError):
        LtiSystem(A=np.ones((2, 3)), B=np.ones((2, 1)))
    with pytest.raises(ValueError):
        LtiSystem(A=np.eye(2), B=np.ones((3, 1)))

    with pytest.raises(StructuralError):
        simulate(LtiSystem(A=np.eye(2), B=np.ones((2, 1))), np.zeros(2), np.zeros(3), np.zeros(4))


def test_mean_motion():
    omega = mean_motion(398600.4418, 7000.0)
    assert omega == pytest.approx(1.0780e-3, rel=1e-4)

    with pytest.raises(DomainError):
        mean_motion(-1.0, 7000.0)


def test_cwh_transition_semigroup():
    omega = CwhParameters().omega
    dt = 60.0

    np.testing.assert_allclose(cwh_transition(omega, dt) @ cwh_transition(omega, dt),
                               cwh_transition(omega, 2 * dt), rtol=0.0, atol=1e-10)


def test_cwh_transition_small_step_is_a_drift():
    omega = CwhParameters().omega
    dt = 1e-6
    drift = np.eye(6)
    drift[:3, 3:] = dt * np.eye(3)
    # Coriolis coupling of the in-plane velocities
    drift[3, 4] = 2 * omega * dt
    drift[4, 3] = -2 * omega * dt

    np.testing.assert_allclose(cwh_transition(omega, dt), drift, rtol=0.0, atol=1e-12)


def test_cwh_impulsive_input(cwh_params):
    system = build_cwh(cwh_params)
    impulse = np.vstack([np.zeros((3, 3)), np.eye(3) / cwh_params.mass])

    assert system.n == 6
    assert system.m == 3
    np.testing.assert_allclose(system.B, system.A @ impulse)


def test_cwh_mean_propagation_matches_recursion(cwh_params):
    system = build_cwh(cwh_params)
    rng = np.random.default_rng(11)
    x0 = np.array([1.65, 0.4, 0.2, 0.0, 0.0, 0.0])
    inputs = rng.uniform(-1.0, 1.0, size=15)
    mean = rng.normal(scale=1e-3, size=30)

    states = simulate(system, x0, inputs, mean)
    dynamics = concatenate(system, 5)

    np.testing.assert_allclose(propagate_mean(dynamics, x0, inputs, mean, 5), states[5], rtol=1e-10, atol=1e-12)
