# -*- coding: utf-8 -*-

"""Discrete-time LTI systems and their concatenated (stacked-horizon) form

For x(k+1) = A x(k) + B u(k) + w(k) the state at step k is affine in the stacked
input U = [u(0); ...; u(N-1)] and stacked disturbance W = [w(0); ...; w(N-1)]::

    x(k) = A^k x(0) + C(k) U + D(k) W

with C(k) = [A^(k-1) B ... A B  B  0] and D(k) = [A^(k-1) ... A  I  0].
"""

from typing import Optional
import logging

import numpy as np
from pydantic import validator

from .errors import DomainError, StructuralError
from .models import ArrayModel, as_array


logger = logging.getLogger(__name__)


class LtiSystem(ArrayModel):
    """Discrete-time LTI system x(k+1) = A x(k) + B u(k) + w(k)
    """

    A: np.ndarray
    B: np.ndarray

    @validator('A', pre=True)
    def _check_a(cls, value):
        arr = as_array(value, ndim=2, name='A')
        if arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise StructuralError(f"'A' must be square and non-empty, got shape {arr.shape}")
        return arr

    @validator('B', pre=True)
    def _check_b(cls, value, values):
        arr = as_array(value, name='B')
        if arr.ndim == 1:
            arr = as_array(arr.reshape(-1, 1), ndim=2, name='B')
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise StructuralError(f"'B' must be a non-empty matrix, got shape {arr.shape}")
        if 'A' in values and arr.shape[0] != values['A'].shape[0]:
            raise StructuralError(f"'B' must have {values['A'].shape[0]} rows, got {arr.shape[0]}")
        return arr

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


class ConcatenatedDynamics(ArrayModel):
    """Stacked-horizon maps of an LTI system

    ``powers[k]`` is A^k for k = 0..N, ``input_maps[k-1]`` is C(k) and
    ``disturbance_maps[k-1]`` is D(k) for k = 1..N.
    """

    horizon: int
    powers: np.ndarray
    input_maps: np.ndarray
    disturbance_maps: np.ndarray

    @property
    def n(self) -> int:
        return self.powers.shape[1]

    @property
    def m(self) -> int:
        return self.input_maps.shape[2] // self.horizon

    def _check_step(self, k: int, allow_zero: bool = False):
        lo = 0 if allow_zero else 1
        if not lo <= k <= self.horizon:
            raise DomainError(f"step {k} is outside {lo}..{self.horizon}")

    def power(self, k: int) -> np.ndarray:
        self._check_step(k, allow_zero=True)
        return self.powers[k]

    def input_map(self, k: int) -> np.ndarray:
        """C(k), shape n x Nm
        """

        self._check_step(k)
        return self.input_maps[k - 1]

    def disturbance_map(self, k: int) -> np.ndarray:
        """D(k), shape n x Nn
        """

        self._check_step(k)
        return self.disturbance_maps[k - 1]


class CwhParameters(ArrayModel):
    """Clohessy-Wiltshire model parameters

    Defaults: Earth's gravitational constant, a 7000 km circular reference orbit,
    a 100 kg deputy and 60 s impulsive sampling.
    """

    mu: float = 398600.4418  # km^3/s^2
    radius: float = 7000.0  # km
    mass: float = 100.0  # kg
    dt: float = 60.0  # s

    @validator('mu', 'radius', 'mass', 'dt')
    def _check_positive(cls, value, field):
        if not np.isfinite(value) or value <= 0:
            raise DomainError(f"'{field.name}' must be finite and positive, got {value}")
        return float(value)

    @property
    def omega(self) -> float:
        return mean_motion(self.mu, self.radius)


def mean_motion(mu: float, radius: float) -> float:
    """Orbital rate sqrt(mu / R0^3) of a circular orbit
    """

    if not (np.isfinite(mu) and np.isfinite(radius) and mu > 0 and radius > 0):
        raise DomainError(f"mean motion needs finite positive mu and radius, got mu={mu}, radius={radius}")

    omega = float(np.sqrt(mu / radius ** 3))
    if not np.isfinite(omega) or omega <= 0:
        raise DomainError(f"mean motion is not finite and positive for mu={mu}, radius={radius}")
    return omega


def _check_horizon(horizon: int):
    if int(horizon) != horizon or horizon < 1:
        raise DomainError(f"horizon must be a positive integer, got {horizon}")


def concatenate(system: LtiSystem, horizon: int) -> ConcatenatedDynamics:
    """Build A^k, C(k) and D(k) for k over the horizon

    Parameters
    ----------
    system : LtiSystem
        The system to stack.
    horizon : int
        The horizon N >= 1.

    Returns
    -------
    dynamics : ConcatenatedDynamics
        C(k) has shape n x Nm and D(k) has shape n x Nn; the trailing (N-k) blocks are zero.

    """

    _check_horizon(horizon)

    n, m = system.n, system.m
    powers = np.empty((horizon + 1, n, n))
    powers[0] = np.eye(n)
    for k in range(1, horizon + 1):
        powers[k] = system.A @ powers[k - 1]

    input_maps = np.zeros((horizon, n, horizon * m))
    disturbance_maps = np.zeros((horizon, n, horizon * n))

    for k in range(1, horizon + 1):
        for j in range(k):
            input_maps[k - 1, :, j * m:(j + 1) * m] = powers[k - 1 - j] @ system.B
            disturbance_maps[k - 1, :, j * n:(j + 1) * n] = powers[k - 1 - j]

    logger.debug("Concatenated dynamics: n=%d, m=%d, N=%d", n, m, horizon)

    return ConcatenatedDynamics(
        horizon=horizon,
        powers=powers,
        input_maps=input_maps,
        disturbance_maps=disturbance_maps,
    )


def _vector(value, size: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size != size:
        raise StructuralError(f"'{name}' must have length {size}, got {arr.size}")
    return arr


def propagate_mean(dynamics: ConcatenatedDynamics,
                   x0: np.ndarray,
                   inputs: np.ndarray,
                   disturbance_mean: np.ndarray,
                   k: int) -> np.ndarray:
    """Return A^k x0 + C(k) U + D(k) W for a stacked input and stacked disturbance (mean)
    """

    n, horizon = dynamics.n, dynamics.horizon
    x0 = _vector(x0, n, 'x0')
    inputs = _vector(inputs, horizon * dynamics.m, 'U')
    disturbance_mean = _vector(disturbance_mean, horizon * n, 'W')

    if k == 0:
        return x0.copy()

    return dynamics.power(k) @ x0 + dynamics.input_map(k) @ inputs + dynamics.disturbance_map(k) @ disturbance_mean


def simulate(system: LtiSystem,
             x0: np.ndarray,
             inputs: np.ndarray,
             disturbances: Optional[np.ndarray] = None) -> np.ndarray:
    """Run the step recursion x(k+1) = A x(k) + B u(k) + w(k)

    Parameters
    ----------
    system : LtiSystem
    x0 : array, shape (n,)
    inputs : array, shape (N, m) or stacked (N*m,)
    disturbances : array, shape (N, n) or stacked (N*n,), optional
        Zero when omitted.

    Returns
    -------
    states : array, shape (N + 1, n)
        x(0), ..., x(N).

    """

    n, m = system.n, system.m
    inputs = np.asarray(inputs, dtype=float).reshape(-1, m)
    horizon = inputs.shape[0]
    _check_horizon(horizon)

    if disturbances is None:
        disturbances = np.zeros((horizon, n))
    disturbances = np.asarray(disturbances, dtype=float).reshape(-1, n)
    if disturbances.shape[0] != horizon:
        raise StructuralError(f"expected {horizon} disturbance vectors, got {disturbances.shape[0]}")

    states = np.empty((horizon + 1, n))
    states[0] = _vector(x0, n, 'x0')
    for k in range(horizon):
        states[k + 1] = system.A @ states[k] + system.B @ inputs[k] + disturbances[k]

    return states


def cwh_transition(omega: float, dt: float) -> np.ndarray:
    """Exact 6x6 Clohessy-Wiltshire state transition matrix over ``dt``

    State order is (x, y, z, vx, vy, vz) with x radial, y along-track and z cross-track.
    """

    nt = omega * dt
    s = np.sin(nt)
    c = np.cos(nt)

    phi_rr = np.array([
        [4 - 3 * c, 0.0, 0.0],
        [6 * (s - nt), 1.0, 0.0],
        [0.0, 0.0, c],
    ])
    phi_rv = np.array([
        [s / omega, 2 * (1 - c) / omega, 0.0],
        [-2 * (1 - c) / omega, (4 * s - 3 * nt) / omega, 0.0],
        [0.0, 0.0, s / omega],
    ])
    phi_vr = np.array([
        [3 * omega * s, 0.0, 0.0],
        [6 * omega * (c - 1), 0.0, 0.0],
        [0.0, 0.0, -omega * s],
    ])
    phi_vv = np.array([
        [c, 2 * s, 0.0],
        [-2 * s, 4 * c - 3, 0.0],
        [0.0, 0.0, c],
    ])

    return np.block([[phi_rr, phi_rv], [phi_vr, phi_vv]])


def build_cwh(params: CwhParameters) -> LtiSystem:
    """Discretize the Clohessy-Wiltshire equations under impulsive control

    The thrust u = (Fx, Fy, Fz) changes the velocity by u / mass at the start of the
    interval, so B = A [0; I / mass].
    """

    a = cwh_transition(params.omega, params.dt)
    impulse = np.vstack([np.zeros((3, 3)), np.eye(3) / params.mass])

    return LtiSystem(A=a, B=a @ impulse)
