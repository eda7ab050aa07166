# -*- coding: utf-8 -*-

"""Experiment pipeline: build, solve, certify and write artifacts
"""

from typing import NamedTuple, Optional, Sequence, TextIO
from enum import Enum
from pathlib import Path
import csv
import logging
import math

import numpy as np
from omegaconf import OmegaConf
from pydantic import root_validator, validator

from .concentration import OSVPI_FLOOR, BoundContext, asymptote, f, inflection_theta, lambda_min
from .config import config, load_document
from .dynamics import CwhParameters, concatenate, propagate_mean
from .errors import ArtifactError, StructuralError
from .models import ArrayModel, DocumentModel, read_document, write_document
from .problem import ProblemSpec, cwh_disturbance_model, load_problem, make_cwh_problem, save_problem
from .reformulation import (
    METHOD_OSVPI,
    METHOD_PROPOSED,
    METHOD_SCENARIO,
    build_osvpi,
    build_proposed,
    build_scenario,
    scenario_sample_count,
)
from .sampling import GaussianModel, SampleSet, compute_statistics, generate_samples, load_samples
from .solver import Solution, SolverConfig, SolveStatus, solve
from .verify import CertificationReport, certify, write_certification_csv


logger = logging.getLogger(__name__)

SOLUTION_FILE = 'solution.json'
CERTIFICATION_FILE = 'certification.json'
CERTIFICATION_CSV = 'certification.csv'
TRAJECTORY_CSV = 'trajectory.csv'
SUMMARY_CSV = 'summary.csv'

SUMMARY_COLUMNS = ('method', 'n_samples', 'status', 'cost', 'solve_seconds', 'satisfaction', 'stderr')


class Method(str, Enum):
    proposed = METHOD_PROPOSED
    scenario = METHOD_SCENARIO
    osvpi = METHOD_OSVPI


class GenerateSamples(ArrayModel):
    model: Path
    count: int
    seed: Optional[int] = None

    @validator('count')
    def _check_count(cls, value):
        if value < 1:
            raise ValueError(f"sample count must be positive, got {value}")
        return value


class SampleSource(ArrayModel):
    """Exactly one of ``generate`` and ``load``
    """

    generate: Optional[GenerateSamples] = None
    load: Optional[Path] = None

    @root_validator(skip_on_failure=True)
    def _check_one(cls, values):
        if (values.get('generate') is None) == (values.get('load') is None):
            raise ValueError("samples need exactly one of 'generate' and 'load'")
        return values


class CertifySettings(ArrayModel):
    trials: int = config.verify.trials
    seed: int = config.verify.seed
    model: Optional[Path] = None


class ExperimentConfig(DocumentModel):
    """One method run on one problem
    """

    problem: Path
    method: Method
    samples: Optional[SampleSource] = None
    model: Optional[Path] = None
    certify: Optional[CertifySettings] = None
    output: Path
    solver: dict = {}

    @root_validator(skip_on_failure=True)
    def _check_inputs(cls, values):
        method = values['method']
        if method in (Method.proposed, Method.scenario) and values.get('samples') is None:
            raise ValueError(f"method '{method.value}' needs 'samples'")
        if method == Method.osvpi and cls._true_model(values) is None:
            raise ValueError("method 'osvpi' needs a disturbance model ('model' or 'samples.generate.model')")
        return values

    @staticmethod
    def _true_model(values: dict) -> Optional[Path]:
        if values.get('model') is not None:
            return values['model']
        samples = values.get('samples')
        if samples is not None and samples.generate is not None:
            return samples.generate.model
        return None

    @property
    def true_model(self) -> Optional[Path]:
        return self._true_model({'model': self.model, 'samples': self.samples})

    @property
    def certify_model(self) -> Optional[Path]:
        if self.certify is not None and self.certify.model is not None:
            return self.certify.model
        return self.true_model


class SummaryRow(ArrayModel):
    method: str
    n_samples: Optional[int] = None
    status: str
    cost: Optional[float] = None
    solve_seconds: float
    satisfaction: Optional[float] = None
    stderr: Optional[float] = None


class RunResult(NamedTuple):
    solution: Solution
    report: Optional[CertificationReport]
    summary: SummaryRow


def _rebase(path: Optional[Path], root: Path) -> Optional[Path]:
    if path is None or path.is_absolute():
        return path
    return root / path


def load_experiment(path: Path) -> ExperimentConfig:
    """Load a YAML or JSON experiment config; relative paths are taken from its directory
    """

    doc = load_document(path)
    try:
        cfg = ExperimentConfig.parse_obj(OmegaConf.to_container(doc, resolve=True))
    except ValueError as err:
        raise ArtifactError(f"Invalid experiment config '{path}'\n{err}") from err

    root = path.parent
    samples = cfg.samples
    if samples is not None:
        if samples.generate is not None:
            samples = samples.copy(update={
                'generate': samples.generate.copy(update={'model': _rebase(samples.generate.model, root)})})
        else:
            samples = samples.copy(update={'load': _rebase(samples.load, root)})

    certify_settings = cfg.certify
    if certify_settings is not None:
        certify_settings = certify_settings.copy(update={'model': _rebase(certify_settings.model, root)})

    return cfg.copy(update={
        'problem': _rebase(cfg.problem, root),
        'samples': samples,
        'model': _rebase(cfg.model, root),
        'certify': certify_settings,
        'output': _rebase(cfg.output, root),
    })


def load_model(path: Path) -> GaussianModel:
    return read_document(GaussianModel, path)


def resolve_samples(source: SampleSource) -> SampleSet:
    if source.load is not None:
        return load_samples(source.load)

    model = load_model(source.generate.model)
    if source.generate.seed is not None:
        model = model.copy(update={'seed': source.generate.seed})
    return generate_samples(model, source.generate.count)


def disturbance_moments(method: Method,
                        samples: Optional[SampleSet],
                        model: Optional[GaussianModel]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance the method plans with
    """

    if method == Method.osvpi:
        return model.mean, model.covariance

    stats = compute_statistics(samples)
    return stats.mean, stats.covariance


def build_and_solve(spec: ProblemSpec,
                    method: Method,
                    samples: Optional[SampleSet] = None,
                    model: Optional[GaussianModel] = None,
                    solver_cfg: Optional[SolverConfig] = None) -> Solution:
    if method == Method.proposed:
        program = build_proposed(spec, compute_statistics(samples))
    elif method == Method.scenario:
        program = build_scenario(spec, samples)
    else:
        program = build_osvpi(spec, model)

    return solve(program, solver_cfg)


def summarize(solution: Solution, report: Optional[CertificationReport]) -> SummaryRow:
    return SummaryRow(
        method=solution.method,
        n_samples=solution.n_samples,
        status=solution.status.value,
        cost=solution.cost,
        solve_seconds=solution.solve_seconds,
        satisfaction=None if report is None else report.joint_satisfaction,
        stderr=None if report is None else report.stderr,
    )


def write_summary(rows: Sequence[SummaryRow], path: Path):
    """Write method, N_s, status, cost, solve seconds and satisfaction per method
    """

    def cell(value):
        return '' if value is None else value

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            for row in rows:
                writer.writerow([cell(getattr(row, name)) for name in SUMMARY_COLUMNS])
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err


def write_trajectory(spec: ProblemSpec,
                     inputs: np.ndarray,
                     mean: np.ndarray,
                     covariance: np.ndarray,
                     path: Path):
    """Mean trajectory A^k x0 + C(k) U + D(k) mean for k = 0..N with per-state std columns
    """

    dynamics = concatenate(spec.system, spec.horizon)
    n = spec.system.n

    header = ['k'] + [f'x{i + 1}' for i in range(n)] + [f'std_x{i + 1}' for i in range(n)]

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(spec.horizon + 1):
                state = propagate_mean(dynamics, spec.x0, inputs, mean, k)
                if k == 0:
                    std = np.zeros(n)
                else:
                    d = dynamics.disturbance_map(k)
                    std = np.sqrt(np.clip(np.einsum('ij,jk,ik->i', d, covariance, d), 0.0, None))
                writer.writerow([k] + [repr(float(v)) for v in state] + [repr(float(v)) for v in std])
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err


def run(cfg: ExperimentConfig) -> RunResult:
    """Run one experiment and write its artifacts to ``cfg.output``
    """

    spec = load_problem(cfg.problem)

    samples = resolve_samples(cfg.samples) if cfg.samples is not None else None
    true_model = load_model(cfg.true_model) if cfg.true_model is not None else None
    solver_cfg = SolverConfig.from_config(**cfg.solver)

    solution = build_and_solve(spec, cfg.method, samples, true_model, solver_cfg)
    write_document(solution, cfg.output / SOLUTION_FILE)

    report = None
    certify_path = cfg.certify_model
    if cfg.certify is not None and certify_path is not None and solution.status != SolveStatus.infeasible:
        certify_model = load_model(certify_path)
        report = certify(spec, solution.U, certify_model, cfg.certify.trials, cfg.certify.seed)
        write_document(report, cfg.output / CERTIFICATION_FILE)
        write_certification_csv(report, cfg.output / CERTIFICATION_CSV)
    elif cfg.certify is not None and certify_path is None:
        logger.warning("No disturbance model to certify against; skipping certification")

    mean, covariance = disturbance_moments(cfg.method, samples, true_model)
    write_trajectory(spec, solution.U, mean, covariance, cfg.output / TRAJECTORY_CSV)

    summary = summarize(solution, report)
    write_summary([summary], cfg.output / SUMMARY_CSV)

    return RunResult(solution, report, summary)


def compare(spec: ProblemSpec,
            model: GaussianModel,
            n_samples: Optional[int] = None,
            trials: Optional[int] = None,
            certify_seed: Optional[int] = None,
            beta: Optional[float] = None,
            solver_cfg: Optional[SolverConfig] = None,
            methods: Sequence[Method] = tuple(Method)) -> list[RunResult]:
    """Run every method on one problem and one sample set

    The sample count defaults to the scenario sample count for (alpha, beta, Nm);
    all sample-based methods share the samples drawn from ``model``.
    """

    if beta is None:
        beta = config.scenario.beta
    if n_samples is None:
        n_samples = scenario_sample_count(spec.alpha, beta, spec.n_inputs)
    trials = config.verify.trials if trials is None else trials
    certify_seed = config.verify.seed if certify_seed is None else certify_seed

    samples = generate_samples(model, n_samples)
    logger.info("Comparing %s with N_s = %d", ', '.join(m.value for m in methods), n_samples)

    results = []
    for method in methods:
        solution = build_and_solve(spec, method, samples, model, solver_cfg)
        report = None
        if solution.status != SolveStatus.infeasible:
            report = certify(spec, solution.U, model, trials, certify_seed)
        results.append(RunResult(solution, report, summarize(solution, report)))

    return results


class BoundTable(NamedTuple):
    lambdas: np.ndarray
    curves: dict[int, np.ndarray]
    limit: np.ndarray
    thresholds: list[tuple[int, float, float, float]]


def bound_table(n_samples: Sequence[int], lambda_max: float, points: int) -> BoundTable:
    """Curves f(lambda) per N_s and the large-sample limit 4 / (9 (lambda^2 + 1))

    The lambda grid includes every lambda_min and sqrt(5/3), so each curve starts at its
    validity threshold; values below it are NaN.
    """

    if lambda_max <= 0 or points < 2:
        raise StructuralError(f"need lambda_max > 0 and at least 2 points, got {lambda_max}, {points}")

    contexts = [BoundContext(n_samples=n) for n in n_samples]
    floors = [lambda_min(ctx) for ctx in contexts]

    grid = np.linspace(lambda_max / points, lambda_max, points)
    extra = [v for v in floors + [OSVPI_FLOOR] if v <= lambda_max]
    lambdas = np.unique(np.concatenate([grid, extra]))

    curves = {}
    for ctx, floor in zip(contexts, floors):
        values = np.full(lambdas.size, np.nan)
        valid = lambdas >= floor
        values[valid] = f(ctx, lambdas[valid])
        curves[ctx.n_samples] = values

    limit = np.where(lambdas >= OSVPI_FLOOR, 4.0 / (9.0 * (lambdas ** 2 + 1.0)), np.nan)
    thresholds = [(ctx.n_samples, floor, inflection_theta(ctx), asymptote(ctx)) for ctx, floor in zip(contexts, floors)]

    return BoundTable(lambdas, curves, limit, thresholds)


def write_bound_rows(table: BoundTable, stream: TextIO):
    """Write the bound table as CSV; NaN cells below a curve's floor are left empty
    """

    def fmt(value: float) -> str:
        return '' if math.isnan(value) else repr(float(value))

    writer = csv.writer(stream)
    writer.writerow(['lambda'] + [f'f_{n}' for n in table.curves] + ['f_inf'])
    for i, lam in enumerate(table.lambdas):
        writer.writerow([repr(float(lam))] + [fmt(c[i]) for c in table.curves.values()] + [fmt(table.limit[i])])


def write_bound_table(table: BoundTable, path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            write_bound_rows(table, fh)
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err


def make_cwh(out_dir: Path,
             params: Optional[CwhParameters] = None,
             alpha: Optional[float] = None,
             horizon: Optional[int] = None) -> tuple[Path, Path]:
    """Write the rendezvous demo problem and its disturbance model
    """

    cwh = config.cwh
    if params is None:
        params = CwhParameters(mu=cwh.mu, radius=cwh.radius, mass=cwh.mass, dt=cwh.dt)
    alpha = cwh.alpha if alpha is None else alpha
    horizon = cwh.horizon if horizon is None else horizon

    spec = make_cwh_problem(params, alpha=alpha, horizon=horizon, x0=np.array(list(cwh.x0), dtype=float))
    model = cwh_disturbance_model(horizon, cwh.position_variance, cwh.velocity_variance)

    problem_path = out_dir / 'cwh_problem.json'
    model_path = out_dir / 'cwh_model.json'
    save_problem(spec, problem_path)
    write_document(model, model_path)

    return problem_path, model_path
