# -*- coding: utf-8 -*-

from .concentration import BoundContext, OsvpiRisk, SampleVpRisk, f, f_inverse, lambda_min, min_samples
from .dynamics import ConcatenatedDynamics, CwhParameters, LtiSystem, concatenate
from .errors import (
    ArtifactError,
    CcstatError,
    DegenerateSamplesError,
    DomainError,
    GateError,
    InfeasibleProblemError,
    InsufficientSamplesError,
    ModelError,
    NumericalError,
    StructuralError,
)
from .problem import ProblemSpec, cwh_disturbance_model, load_problem, make_cwh_problem, save_problem
from .reformulation import build_osvpi, build_proposed, build_scenario, scenario_sample_count
from .sampling import GaussianModel, SampleSet, compute_statistics, generate_samples
from .solver import Solution, SolverConfig, SolveStatus, kkt_report, solve
from .verify import CertificationReport, certify
from .version import __version__  # noqa


__all__ = [
    'LtiSystem',
    'ConcatenatedDynamics',
    'CwhParameters',
    'concatenate',
    'GaussianModel',
    'SampleSet',
    'generate_samples',
    'compute_statistics',
    'BoundContext',
    'SampleVpRisk',
    'OsvpiRisk',
    'f',
    'f_inverse',
    'lambda_min',
    'min_samples',
    'ProblemSpec',
    'load_problem',
    'save_problem',
    'make_cwh_problem',
    'cwh_disturbance_model',
    'build_proposed',
    'build_osvpi',
    'build_scenario',
    'scenario_sample_count',
    'Solution',
    'SolverConfig',
    'SolveStatus',
    'solve',
    'kkt_report',
    'CertificationReport',
    'certify',
    'CcstatError',
    'StructuralError',
    'DomainError',
    'NumericalError',
    'ModelError',
    'ArtifactError',
    'GateError',
    'InsufficientSamplesError',
    'DegenerateSamplesError',
    'InfeasibleProblemError',
]
