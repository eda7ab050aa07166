# -*- coding: utf-8 -*-

import json

import pytest
import numpy as np

from ccstat.errors import ArtifactError
from ccstat.problem import (
    InputBox,
    InputPolytope,
    ProblemSpec,
    TargetPolytope,
    cwh_disturbance_model,
    load_problem,
    save_problem,
)


def problem_kwargs(system, make_box_target, **overrides):
    kwargs = dict(
        system=system,
        horizon=3,
        x0=[0.0, 0.0],
        input_box=InputBox(lo=[-1.0], hi=[1.0]),
        targets=[make_box_target(3)],
        alpha=0.1,
    )
    kwargs.update(overrides)
    return kwargs


def test_cwh_problem_structure(cwh_problem):
    target_set = cwh_problem.target_set

    assert cwh_problem.horizon == 5
    assert cwh_problem.alpha == 0.05
    assert cwh_problem.n_inputs == 15
    assert target_set.total == 32
    assert target_set.steps == [1, 2, 3, 4, 5]
    assert [p.count for p in target_set.polytopes] == [5, 5, 5, 5, 12]

    terminal = target_set.polytopes[-1]
    np.testing.assert_array_equal(terminal.G[:2, 0], [1.0, -1.0])
    np.testing.assert_array_equal(terminal.h[:2], [2.0, 0.0])
    np.testing.assert_array_equal(terminal.h[6:], 0.1)

    np.testing.assert_array_equal(cwh_problem.input_box.lo, -np.ones(3))
    np.testing.assert_array_equal(cwh_problem.input_box.hi, np.ones(3))


def test_target_rows_are_ordered_by_step(cwh_problem):
    labels = cwh_problem.target_set.labels()

    assert len(labels) == 32
    assert labels[0] == (1, 0)
    assert labels[4] == (1, 4)
    assert labels[5] == (2, 0)
    assert labels[-1] == (5, 11)


def test_problem_file_round_trip(tmp_path, cwh_problem):
    path = tmp_path / 'problem.json'
    save_problem(cwh_problem, path)

    doc = json.loads(path.read_text())
    assert doc['schema'] == 1

    assert load_problem(path) == cwh_problem


def test_wrong_schema_version(tmp_path, cwh_problem):
    path = tmp_path / 'problem.json'
    save_problem(cwh_problem, path)

    doc = json.loads(path.read_text())
    doc['schema'] = 2
    path.write_text(json.dumps(doc))

    with pytest.raises(ArtifactError):
        load_problem(path)


@pytest.mark.parametrize('alpha', [0.0, 1.0 / 6.0, 0.3])
def test_alpha_range(double_integrator, make_box_target, alpha):
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, alpha=alpha))


def test_target_steps(double_integrator, make_box_target):
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target,
                                     targets=[make_box_target(2), make_box_target(2)]))
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, targets=[make_box_target(4)]))
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, targets=[]))


def test_empty_target_polytope(double_integrator, make_box_target):
    empty = TargetPolytope(step=3, G=[[1.0, 0.0], [-1.0, 0.0]], h=[-1.0, -1.0])

    assert empty.is_empty()
    assert not make_box_target(3).is_empty()

    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, targets=[empty]))


def test_zero_normal_is_rejected():
    with pytest.raises(ValueError):
        TargetPolytope(step=1, G=[[0.0, 0.0]], h=[1.0])


def test_dimension_checks(double_integrator, make_box_target):
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, x0=[0.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target,
                                     input_box=InputBox(lo=[-1.0, -1.0], hi=[1.0, 1.0])))
    with pytest.raises(ValueError):
        InputBox(lo=[1.0], hi=[-1.0])


def test_objective_weight(double_integrator, make_box_target):
    spec = ProblemSpec(**problem_kwargs(double_integrator, make_box_target))
    np.testing.assert_array_equal(spec.objective_weight(), np.eye(3))

    weight = np.diag([1.0, 2.0, 3.0])
    spec = ProblemSpec(**problem_kwargs(double_integrator, make_box_target, objective=weight))
    np.testing.assert_array_equal(spec.objective_weight(), weight)

    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, objective=np.eye(2)))
    with pytest.raises(ValueError):
        ProblemSpec(**problem_kwargs(double_integrator, make_box_target, objective=-np.eye(3)))


def test_stacked_input_sets(double_integrator, make_box_target):
    spec = ProblemSpec(**problem_kwargs(
        double_integrator, make_box_target,
        input_box=InputBox(lo=[-2.0], hi=[1.0]),
        input_polytope=InputPolytope(A=[[1.0]], b=[0.5]),
    ))

    lower, upper = spec.stacked_bounds()
    np.testing.assert_array_equal(lower, [-2.0, -2.0, -2.0])
    np.testing.assert_array_equal(upper, [1.0, 1.0, 1.0])

    a, b = spec.stacked_polytope()
    np.testing.assert_array_equal(a, np.eye(3))
    np.testing.assert_array_equal(b, [0.5, 0.5, 0.5])


def test_cwh_disturbance_model():
    model = cwh_disturbance_model(horizon=5)
    diagonal = np.diag(model.covariance)

    assert model.dim == 30
    np.testing.assert_array_equal(model.mean, np.zeros(30))
    np.testing.assert_array_equal(diagonal[:3], 1e-6)
    np.testing.assert_array_equal(diagonal[3:6], 5e-8)
    assert np.count_nonzero(model.covariance) == 30
