# -*- coding: utf-8 -*-

import math

import pytest
import numpy as np

from ccstat.concentration import OSVPI_FLOOR, BoundContext, f, lambda_min
from ccstat.dynamics import concatenate
from ccstat.errors import DomainError, InfeasibleProblemError, InsufficientSamplesError, StructuralError
from ccstat.problem import InputPolytope, ProblemSpec, TargetPolytope
from ccstat.reformulation import (
    METHOD_OSVPI,
    METHOD_PROPOSED,
    build_osvpi,
    build_proposed,
    build_scenario,
    row_constants,
    scenario_sample_count,
)
from ccstat.sampling import GaussianModel, SampleStatistics, compute_statistics, generate_samples


@pytest.fixture(scope='module')
def cwh_samples(cwh_model):
    return generate_samples(cwh_model, 1337)


def test_scenario_sample_count():
    assert scenario_sample_count(0.05, 1e-8, 15) == 1337
    assert scenario_sample_count(0.1, 1e-4, 10) == 385
    assert scenario_sample_count(0.5, 1.0, 10) == 40

    with pytest.raises(DomainError):
        scenario_sample_count(0.0, 1e-4, 10)
    with pytest.raises(DomainError):
        scenario_sample_count(0.1, 0.0, 10)
    with pytest.raises(DomainError):
        scenario_sample_count(0.1, 1e-4, 0)


def test_cwh_proposed_program(cwh_problem, cwh_samples):
    program = build_proposed(cwh_problem, compute_statistics(cwh_samples))

    assert program.method == METHOD_PROPOSED
    assert program.n_rows == 32
    assert program.n_inputs == 15
    assert program.n_samples == 1337
    assert program.risk_budget == 0.05
    assert program.lambda_floor == lambda_min(BoundContext(n_samples=1337))
    assert np.all(program.sigma > 0.0)
    assert program.deterministic_charge() == 0.0
    assert [tuple(label) for label in program.labels[:2]] == [(1, 0), (1, 1)]


def test_cwh_scenario_program(cwh_problem, cwh_samples):
    program = build_scenario(cwh_problem, cwh_samples)

    assert program.n_rows == 32 * 1337
    assert program.rows.shape == (42784, 15)
    assert program.n_samples == 1337
    assert tuple(program.labels[0]) == (1, 0, 0)
    assert tuple(program.labels[1336]) == (1, 0, 1336)
    assert tuple(program.labels[-1]) == (5, 11, 1336)


def test_scenario_rows_shift_by_sample(single_row_problem):
    samples = generate_samples(GaussianModel(mean=[0.0], covariance=[[1.0]], seed=9), 6)
    program = build_scenario(single_row_problem, samples)

    np.testing.assert_array_equal(program.rows, np.ones((6, 1)))
    np.testing.assert_allclose(program.rhs, -1.0 - samples.samples[:, 0])


def test_sample_gates(cwh_problem, cwh_model):
    stats = compute_statistics(generate_samples(cwh_model, 100))

    with pytest.raises(InsufficientSamplesError) as err:
        build_proposed(cwh_problem, stats)
    assert err.value.required == 284
    assert err.value.actual == 100

    few = SampleStatistics(count=3, mean=np.zeros(30), covariance=np.eye(30))
    with pytest.raises(InsufficientSamplesError) as err:
        build_proposed(cwh_problem, few)
    assert err.value.required == 4


def test_dimension_mismatch(toy_problem):
    stats = SampleStatistics(count=100, mean=np.zeros(4), covariance=np.eye(4))

    with pytest.raises(StructuralError):
        build_proposed(toy_problem, stats)


def test_cwh_osvpi_program(cwh_problem, cwh_model):
    program = build_osvpi(cwh_problem, cwh_model)

    assert program.method == METHOD_OSVPI
    assert program.n_rows == 32
    assert program.lambda_floor == pytest.approx(math.sqrt(5.0 / 3.0))
    assert program.n_samples is None
    assert program.risk_limit == 0.0


def test_zero_covariance_rows_are_charged(toy_problem):
    stats = SampleStatistics(count=100, mean=np.zeros(6), covariance=np.zeros((6, 6)))
    program = build_proposed(toy_problem, stats)

    np.testing.assert_array_equal(program.sigma, np.zeros(4))
    assert not np.any(program.random_rows)
    ctx = BoundContext(n_samples=100)
    assert program.deterministic_charge() == pytest.approx(4 * f(ctx, lambda_min(ctx)))
    assert program.deterministic_charge() > toy_problem.alpha

    known = build_osvpi(toy_problem, GaussianModel(mean=np.zeros(6), covariance=np.zeros((6, 6))))
    assert known.deterministic_charge() == 0.0


def test_unreachable_row_is_diagnosed(toy_problem, toy_model):
    far = TargetPolytope(step=3, G=[[-1.0, 0.0]], h=[-100.0])
    spec = toy_problem.copy(update={'targets': [far]})

    with pytest.raises(InfeasibleProblemError) as err:
        build_osvpi(spec, toy_model)

    assert err.value.step == 3
    assert err.value.index == 0


def test_row_blocked_by_input_polytope_is_diagnosed(toy_problem, toy_model):
    # x1(3) = 0.5 + 2.5 u0 + 1.5 u1 + 0.5 u2 reaches -4 in the box but not with u >= 0
    spec = toy_problem.copy(update={
        'targets': [TargetPolytope(step=3, G=[[1.0, 0.0]], h=[0.0])],
        'input_polytope': InputPolytope(A=[[-1.0]], b=[0.0]),
    })

    with pytest.raises(InfeasibleProblemError) as err:
        build_osvpi(spec, toy_model)

    assert err.value.step == 3
    assert err.value.index == 0

    open_spec = spec.copy(update={'input_polytope': None})
    assert build_osvpi(open_spec, toy_model).n_rows == 1


def test_input_polytope_outside_box(toy_problem, toy_model):
    spec = toy_problem.copy(update={'input_polytope': InputPolytope(A=[[1.0], [-1.0]], b=[-2.0, 3.0])})

    with pytest.raises(DomainError):
        build_osvpi(spec, toy_model)


def test_single_row_constants(single_row_problem):
    dynamics = concatenate(single_row_problem.system, 1)
    constants = row_constants(single_row_problem, dynamics, np.array([0.2]), np.array([[0.04]]))

    np.testing.assert_array_equal(constants.rows, [[1.0]])
    assert constants.sigma[0] == pytest.approx(0.2)
    assert constants.rhs[0] == pytest.approx(-1.2)
    assert tuple(constants.labels[0]) == (1, 0)


def test_sample_and_true_moments_agree_for_many_samples(toy_problem, toy_model):
    stats = compute_statistics(generate_samples(toy_model, 20000))

    proposed = build_proposed(toy_problem, stats)
    known = build_osvpi(toy_problem, toy_model)

    np.testing.assert_allclose(proposed.rows, known.rows)
    np.testing.assert_allclose(proposed.sigma, known.sigma, rtol=0.05)
    np.testing.assert_allclose(proposed.rhs, known.rhs, atol=0.01)


def test_problem_objective_is_carried(double_integrator, make_box_target, toy_model):
    weight = np.diag([1.0, 2.0, 3.0])
    spec = ProblemSpec(system=double_integrator, horizon=3, x0=[0.5, 0.0],
                       input_box={'lo': [-1.0], 'hi': [1.0]}, targets=[make_box_target(3)],
                       alpha=0.1, objective=weight)
    program = build_osvpi(spec, toy_model)

    np.testing.assert_array_equal(program.objective, weight)
    assert program.cost(np.ones(3)) == pytest.approx(6.0)
    assert program.lambda_floor == OSVPI_FLOOR
