# -*- coding: utf-8 -*-

import csv
import math

import pytest
import numpy as np

from ccstat.concentration import OSVPI_FLOOR, BoundContext, asymptote, lambda_min
from ccstat.dynamics import LtiSystem, concatenate, propagate_mean
from ccstat.errors import ArtifactError
from ccstat.experiment import (
    ExperimentConfig,
    Method,
    SampleSource,
    bound_table,
    compare,
    load_experiment,
    write_trajectory,
)
from ccstat.problem import InputBox, ProblemSpec, TargetPolytope
from ccstat.reformulation import build_proposed
from ccstat.sampling import GaussianModel, compute_statistics, generate_samples
from ccstat.solver import SolveStatus, kkt_report, solve
from ccstat.verify import certify, validate_in_sample, validate_out_of_sample


def test_bound_table_starts_each_curve_at_its_floor():
    table = bound_table([10, 100], lambda_max=10.0, points=50)
    floor = lambda_min(BoundContext(n_samples=10))

    assert floor in table.lambdas
    assert OSVPI_FLOOR in table.lambdas
    assert np.all(np.diff(table.lambdas) > 0.0)

    curve = table.curves[10]
    assert np.all(np.isnan(curve[table.lambdas < floor]))
    assert not np.any(np.isnan(curve[table.lambdas >= floor]))
    assert table.limit[-1] == pytest.approx(4.0 / (9.0 * 101.0))

    n_samples, theta_floor, theta, limit = table.thresholds[1]
    assert n_samples == 100
    assert theta < theta_floor
    assert limit == asymptote(BoundContext(n_samples=100))


def test_bound_curves_tighten_with_more_samples():
    table = bound_table([10, 1000], lambda_max=10.0, points=100)
    shared = ~np.isnan(table.curves[10])

    assert np.all(table.curves[10][shared] >= table.curves[1000][shared])

    valid = table.lambdas >= OSVPI_FLOOR
    np.testing.assert_allclose(table.limit[valid], 4.0 / (9.0 * (table.lambdas[valid] ** 2 + 1.0)))
    assert np.all(table.curves[1000][shared & valid] >= table.limit[shared & valid])


def test_trajectory_csv(tmp_path, toy_problem):
    path = tmp_path / 'trajectory.csv'
    inputs = np.array([0.1, -0.2, 0.3])
    covariance = 1e-2 * np.eye(6)
    write_trajectory(toy_problem, inputs, np.zeros(6), covariance, path)

    with path.open() as fh:
        rows = list(csv.reader(fh))

    assert rows[0] == ['k', 'x1', 'x2', 'std_x1', 'std_x2']
    assert len(rows) == 5

    dynamics = concatenate(toy_problem.system, 3)
    final = propagate_mean(dynamics, toy_problem.x0, inputs, np.zeros(6), 3)
    assert float(rows[4][1]) == pytest.approx(final[0])
    # no disturbance has entered at k = 0
    assert float(rows[1][3]) == 0.0
    assert float(rows[2][4]) == pytest.approx(0.1)


def test_experiment_paths_are_relative_to_the_config(tmp_path):
    path = tmp_path / 'runs' / 'exp.yaml'
    path.parent.mkdir()
    path.write_text(
        'problem: problem.json\n'
        'method: osvpi\n'
        'model: ../models/model.json\n'
        'output: out\n'
        'solver:\n'
        '  max_iter: 80\n'
    )

    cfg = load_experiment(path)

    assert cfg.method == Method.osvpi
    assert cfg.problem == path.parent / 'problem.json'
    assert cfg.true_model == path.parent / '../models/model.json'
    assert cfg.output == path.parent / 'out'
    assert cfg.solver == {'max_iter': 80}


def test_invalid_experiment_config(tmp_path):
    path = tmp_path / 'exp.yaml'
    path.write_text('problem: problem.json\nmethod: proposed\noutput: out\n')

    with pytest.raises(ArtifactError):
        load_experiment(path)

    with pytest.raises(ValueError):
        SampleSource()
    with pytest.raises(ValueError):
        ExperimentConfig(problem='p.json', method='osvpi', output='out')


@pytest.mark.slow
def test_rendezvous_comparison(cwh_problem, cwh_model):
    results = {r.solution.method: r for r in compare(cwh_problem, cwh_model, n_samples=1337, trials=100000,
                                                     certify_seed=3)}

    proposed, scenario, known = results['proposed'], results['scenario'], results['osvpi']

    for result in results.values():
        assert result.solution.status == SolveStatus.optimal
        assert result.solution.n_samples in (None, 1337)
        assert result.solution.residuals.max() <= 1e-6

    assert proposed.solution.cost > scenario.solution.cost
    assert proposed.solution.cost / known.solution.cost <= 1.10

    assert proposed.report.joint_satisfaction == 1.0
    assert proposed.report.violations == 0
    assert scenario.report.joint_satisfaction >= 0.99

    assert proposed.solution.solve_seconds < scenario.solution.solve_seconds


@pytest.mark.slow
def test_rendezvous_cost_across_sample_seeds(cwh_problem, cwh_model):
    costs = []
    for seed in range(5):
        model = cwh_model.copy(update={'seed': 1000 + seed})
        (result,) = compare(cwh_problem, model, n_samples=1337, trials=20000, certify_seed=seed,
                            methods=(Method.proposed,))
        assert result.solution.is_optimal
        costs.append(result.solution.cost)

    costs = np.array(costs)
    np.testing.assert_allclose(costs, costs.mean(), rtol=0.2)


@pytest.mark.slow
def test_known_moments_comparison(cwh_problem, cwh_model):
    results = compare(cwh_problem, cwh_model, n_samples=5000, trials=100000, certify_seed=4,
                      methods=(Method.proposed, Method.osvpi))
    proposed, known = (r.solution for r in results)

    assert proposed.is_optimal and known.is_optimal
    assert proposed.cost / known.cost <= 1.10

    for result in results:
        assert result.report.joint_satisfaction == 1.0
        assert result.solution.residuals.max() <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize('n_samples', [4, 10, 100, 1000])
def test_out_of_sample_battery(n_samples):
    floor = lambda_min(BoundContext(n_samples=n_samples))
    lambdas = [floor + 0.1] + [lam for lam in (2.0, 3.0, 5.0) if lam > floor + 0.1]

    cells = validate_out_of_sample([n_samples], lambdas, trials=10000, seed=n_samples)
    assert all(cell.passed for cell in cells)


@pytest.mark.slow
@pytest.mark.parametrize('n_samples', [4, 10, 100, 1000])
def test_in_sample_battery(n_samples):
    cells = validate_in_sample([n_samples], [1.5, 2.0, 3.0, 5.0], trials=10000, seed=n_samples)
    assert all(cell.passed for cell in cells)


def random_instance(seed: int) -> tuple[ProblemSpec, GaussianModel]:
    """Contractive system with a random terminal polytope around the mean under a reference input
    """

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, n + 1))
    horizon = int(rng.integers(1, 5))

    a = rng.normal(size=(n, n))
    system = LtiSystem(A=0.9 * a / np.linalg.norm(a, 2), B=rng.normal(size=(n, m)))
    x0 = rng.uniform(-1.0, 1.0, size=n)

    # the reference input keeps every row at least 0.5 inside
    reference = rng.uniform(-0.5, 0.5, size=horizon * m)
    state = propagate_mean(concatenate(system, horizon), x0, reference, np.zeros(horizon * n), horizon)

    count = int(rng.integers(n + 1, 2 * n + 2))
    normals = rng.normal(size=(count, n))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    target = TargetPolytope(step=horizon, G=normals, h=normals @ state + rng.uniform(0.5, 1.5, size=count))

    spec = ProblemSpec(system=system, horizon=horizon, x0=x0, input_box=InputBox(lo=-np.ones(m), hi=np.ones(m)),
                       targets=[target], alpha=float(rng.uniform(0.02, 0.15)))
    model = GaussianModel(mean=np.zeros(horizon * n), covariance=5e-5 * np.eye(horizon * n), seed=seed)

    return spec, model


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(20))
def test_random_instances_are_certified(seed):
    spec, model = random_instance(seed)
    program = build_proposed(spec, compute_statistics(generate_samples(model, 500)))
    solution = solve(program)

    assert solution.status == SolveStatus.optimal
    assert kkt_report(program, solution).max() <= 1e-6
    assert math.isfinite(solution.cost)

    report = certify(spec, solution.U, model, trials=100000, seed=seed + 100)
    assert report.joint_satisfaction >= 1.0 - spec.alpha - 3.0 * report.stderr
