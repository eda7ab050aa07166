# -*- coding: utf-8 -*-

import os

import pytest
from hypothesis import HealthCheck, settings
import numpy as np

from ccstat.dynamics import CwhParameters, LtiSystem
from ccstat.problem import InputBox, ProblemSpec, TargetPolytope, cwh_disturbance_model, make_cwh_problem
from ccstat.sampling import GaussianModel


settings.register_profile('default', max_examples=50, deadline=None)
settings.register_profile('fast', max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv('HYPOTHESIS_PROFILE', 'default'))


@pytest.fixture(autouse=True)
def numpy_errors():
    with np.errstate(invalid='raise'):
        yield


@pytest.fixture
def double_integrator() -> LtiSystem:
    return LtiSystem(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.5], [1.0]])


def box_target(step: int, half_width: float = 1.0) -> TargetPolytope:
    """|x1| <= half_width, |x2| <= half_width
    """

    return TargetPolytope(
        step=step,
        G=[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
        h=[half_width] * 4,
    )


@pytest.fixture
def make_box_target():
    return box_target


@pytest.fixture
def toy_problem(double_integrator) -> ProblemSpec:
    return ProblemSpec(
        system=double_integrator,
        horizon=3,
        x0=[0.5, 0.0],
        input_box=InputBox(lo=[-1.0], hi=[1.0]),
        targets=[box_target(3)],
        alpha=0.1,
    )


@pytest.fixture
def toy_model() -> GaussianModel:
    return GaussianModel(mean=np.zeros(6), covariance=1e-4 * np.eye(6), seed=3)


@pytest.fixture
def scalar_system() -> LtiSystem:
    return LtiSystem(A=[[1.0]], B=[[1.0]])


@pytest.fixture
def single_row_problem(scalar_system) -> ProblemSpec:
    """x(1) = u + w(0) <= -1 with u in [-10, 10]
    """

    return ProblemSpec(
        system=scalar_system,
        horizon=1,
        x0=[0.0],
        input_box=InputBox(lo=[-10.0], hi=[10.0]),
        targets=[TargetPolytope(step=1, G=[[1.0]], h=[-1.0])],
        alpha=0.1,
    )


@pytest.fixture(scope='session')
def cwh_params() -> CwhParameters:
    return CwhParameters()


@pytest.fixture(scope='session')
def cwh_problem(cwh_params) -> ProblemSpec:
    return make_cwh_problem(cwh_params)


@pytest.fixture(scope='session')
def cwh_model() -> GaussianModel:
    return cwh_disturbance_model(horizon=5, seed=7)
