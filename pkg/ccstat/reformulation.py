# -*- coding: utf-8 -*-

"""Deterministic programs equivalent to (or conservative for) the chance constraint

Every target half-space G_ik x(k) <= h_ik becomes the affine row::

    a_ik U + sigma_ik lambda_ik <= rhs_ik

with a_ik = G_ik C(k), rhs_ik = h_ik - G_ik (A^k x0 + D(k) mean) and
sigma_ik = sqrt(G_ik D(k) cov D(k)^T G_ik^T). The rows share one risk constraint
sum r(lambda_ik) <= alpha, where r is the sample-based bound (``proposed``) or the
one-sided Vysochanskij-Petunin bound (``osvpi``).
"""

from typing import Optional
import logging
import math

import numpy as np
from pydantic import validator
import scipy.optimize

from .concentration import (
    MIN_UNIMODAL_SAMPLES,
    OSVPI_FLOOR,
    BoundContext,
    OsvpiRisk,
    RiskMap,
    SampleVpRisk,
    lambda_min,
    min_samples,
)
from .dynamics import ConcatenatedDynamics, concatenate
from .errors import DomainError, InfeasibleProblemError, InsufficientSamplesError, StructuralError
from .models import ArrayModel, as_array
from .problem import ProblemSpec
from .sampling import GaussianModel, SampleSet, SampleStatistics, clamp_radicand


logger = logging.getLogger(__name__)

METHOD_PROPOSED = 'proposed'
METHOD_OSVPI = 'osvpi'
METHOD_SCENARIO = 'scenario'

METHODS = (METHOD_PROPOSED, METHOD_SCENARIO, METHOD_OSVPI)

# Slack allowed by the per-row infeasibility diagnosis
DIAGNOSIS_TOL = 1e-12


def _as_labels(value, width: int) -> np.ndarray:
    arr = np.array(value, dtype=np.int64).reshape(-1, width)
    arr.setflags(write=False)
    return arr


class InputProgram(ArrayModel):
    """Input set and quadratic cost U^T Q U shared by all program kinds
    """

    n_inputs: int
    lower: np.ndarray
    upper: np.ndarray
    input_rows: np.ndarray
    input_rhs: np.ndarray
    objective: np.ndarray

    @validator('lower', 'upper', 'input_rhs', pre=True)
    def _check_vectors(cls, value, field):
        return as_array(value, ndim=1, name=field.name)

    @validator('input_rows', 'objective', pre=True)
    def _check_matrices(cls, value, field):
        return as_array(value, ndim=2, name=field.name)

    def cost(self, inputs: np.ndarray) -> float:
        inputs = np.asarray(inputs, dtype=float)
        return float(inputs @ self.objective @ inputs)


class ReformulatedProgram(InputProgram):
    """Convex program of the proposed or OSVPI method

    ``labels[j]`` is the (step, index) of affine row j. A row with ``sigma == 0`` keeps its
    lambda fixed at the floor and is charged the risk map's value there.
    """

    method: str
    rows: np.ndarray
    sigma: np.ndarray
    rhs: np.ndarray
    labels: np.ndarray
    risk_budget: float
    lambda_floor: float
    n_samples: Optional[int] = None

    @validator('rows', pre=True)
    def _check_rows(cls, value):
        return as_array(value, ndim=2, name='rows')

    @validator('sigma', 'rhs', pre=True)
    def _check_row_vectors(cls, value, field):
        return as_array(value, ndim=1, name=field.name)

    @validator('sigma')
    def _check_sigma(cls, value):
        if np.any(value < 0.0):
            raise DomainError("row standard deviations must be nonnegative")
        return value

    @validator('labels', pre=True)
    def _check_labels(cls, value):
        return _as_labels(value, 2)

    @validator('method')
    def _check_method(cls, value):
        if value not in (METHOD_PROPOSED, METHOD_OSVPI):
            raise ValueError(f"unknown reformulation method '{value}'")
        return value

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_lambda(self) -> int:
        return self.n_rows

    @property
    def random_rows(self) -> np.ndarray:
        """Mask of rows whose risk variable survives (sigma > 0)
        """

        return self.sigma > 0.0

    def risk_map(self) -> RiskMap:
        if self.method == METHOD_OSVPI:
            return OsvpiRisk()
        return SampleVpRisk(BoundContext(n_samples=self.n_samples))

    @property
    def risk_limit(self) -> float:
        return self.risk_map().limit

    def deterministic_charge(self) -> float:
        """Risk charged to rows whose lambda is fixed at the floor
        """

        return float(np.count_nonzero(~self.random_rows)) * self.risk_map().floor_charge


class ScenarioProgram(InputProgram):
    """Sampled linear constraints, one per (step, index, sample)
    """

    rows: np.ndarray
    rhs: np.ndarray
    labels: np.ndarray
    n_samples: int

    @validator('rows', pre=True)
    def _check_rows(cls, value):
        return as_array(value, ndim=2, name='rows')

    @validator('rhs', pre=True)
    def _check_rhs(cls, value):
        return as_array(value, ndim=1, name='rhs')

    @validator('labels', pre=True)
    def _check_labels(cls, value):
        return _as_labels(value, 3)

    @property
    def method(self) -> str:
        return METHOD_SCENARIO

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


class RowConstants(ArrayModel):
    rows: np.ndarray
    sigma: np.ndarray
    rhs: np.ndarray
    labels: np.ndarray


def _input_program(spec: ProblemSpec) -> dict:
    lower, upper = spec.stacked_bounds()
    polytope = spec.stacked_polytope()
    if polytope is None:
        polytope = np.zeros((0, spec.n_inputs)), np.zeros(0)

    return dict(
        n_inputs=spec.n_inputs,
        lower=lower,
        upper=upper,
        input_rows=polytope[0],
        input_rhs=polytope[1],
        objective=spec.objective_weight(),
    )


def _check_disturbance_dim(spec: ProblemSpec, dim: int):
    expected = spec.horizon * spec.system.n
    if dim != expected:
        raise StructuralError(f"disturbance dimension {dim} does not match N*n = {expected}")


def _best_left_side(coeffs: np.ndarray,
                    lower: np.ndarray,
                    upper: np.ndarray,
                    polytope: Optional[tuple[np.ndarray, np.ndarray]]) -> float:
    """min coeffs . U over the input box intersected with the input polytope
    """

    if polytope is None or polytope[0].shape[0] == 0:
        return float(np.minimum(coeffs * lower, coeffs * upper).sum())

    result = scipy.optimize.linprog(coeffs, A_ub=polytope[0], b_ub=polytope[1],
                                    bounds=list(zip(lower, upper)), method='highs')
    if result.status == 2:
        raise DomainError("the input polytope does not meet the input box")
    if result.status != 0:
        logger.warning("Row diagnosis fell back to the input box: %s", result.message)
        return float(np.minimum(coeffs * lower, coeffs * upper).sum())

    return float(result.fun)


def row_constants(spec: ProblemSpec,
                  dynamics: ConcatenatedDynamics,
                  mean: np.ndarray,
                  covariance: np.ndarray,
                  lambda_floor: float = 0.0) -> RowConstants:
    """Per-row (a_ik, sigma_ik, rhs_ik) for a disturbance mean and covariance

    A row is diagnosed infeasible when even the best input in the input set (box and
    polytope) leaves less room than sigma_ik * lambda_floor.

    Raises
    ------
    InfeasibleProblemError : Some row cannot be met anywhere in the input set.
    DomainError : The input polytope and the input box do not intersect.

    """

    _check_disturbance_dim(spec, np.asarray(mean).size)

    lower, upper = spec.stacked_bounds()
    polytope = spec.stacked_polytope()
    x0 = spec.x0

    rows, sigma, rhs, labels = [], [], [], []

    for row in spec.target_set.rows():
        k = row.step
        coeffs = row.normal @ dynamics.input_map(k)
        disturbance_row = row.normal @ dynamics.disturbance_map(k)

        constant = float(row.normal @ dynamics.power(k) @ x0 + disturbance_row @ mean)
        variance = float(disturbance_row @ covariance @ disturbance_row)
        scale = float(np.abs(disturbance_row) @ np.abs(covariance) @ np.abs(disturbance_row))
        std = math.sqrt(clamp_radicand(variance, scale))

        row_rhs = row.bound - constant
        best = _best_left_side(coeffs, lower, upper, polytope)
        if best + std * lambda_floor > row_rhs + DIAGNOSIS_TOL * max(1.0, abs(row_rhs)):
            raise InfeasibleProblemError(
                f"target half-space {row.index} at step {k} cannot be met by any admissible input "
                f"(best left side {best + std * lambda_floor:.6g} > right side {row_rhs:.6g})",
                step=k, index=row.index)

        rows.append(coeffs)
        sigma.append(std)
        rhs.append(row_rhs)
        labels.append((k, row.index))

    return RowConstants(rows=np.array(rows), sigma=np.array(sigma), rhs=np.array(rhs), labels=_as_labels(labels, 2))


def build_proposed(spec: ProblemSpec,
                   stats: SampleStatistics,
                   ctx: Optional[BoundContext] = None) -> ReformulatedProgram:
    """Convex program with the sample-based bound

    Raises
    ------
    InsufficientSamplesError : N_s < 4 or N_s < min_samples(sum N_Tk, alpha).

    """

    if stats.count < MIN_UNIMODAL_SAMPLES:
        raise InsufficientSamplesError('unimodality gate (N_s >= 4)', MIN_UNIMODAL_SAMPLES, stats.count)
    if ctx is None:
        ctx = BoundContext(n_samples=stats.count)
    if ctx.n_samples != stats.count:
        raise StructuralError(f"bound context has N_s = {ctx.n_samples} but statistics have {stats.count} samples")

    total = spec.target_set.total
    required = min_samples(total, spec.alpha)
    if ctx.n_samples < required:
        raise InsufficientSamplesError(
            f'necessary sample count for {total} half-spaces at alpha = {spec.alpha:g}', required, ctx.n_samples)

    _check_disturbance_dim(spec, stats.dim)

    floor = lambda_min(ctx)
    dynamics = concatenate(spec.system, spec.horizon)
    constants = row_constants(spec, dynamics, stats.mean, stats.covariance, floor)

    logger.debug("Built proposed program: %d rows, N_s = %d, lambda_min = %.6g", total, ctx.n_samples, floor)

    return ReformulatedProgram(
        method=METHOD_PROPOSED,
        rows=constants.rows,
        sigma=constants.sigma,
        rhs=constants.rhs,
        labels=constants.labels,
        risk_budget=spec.alpha,
        lambda_floor=floor,
        n_samples=ctx.n_samples,
        **_input_program(spec),
    )


def build_osvpi(spec: ProblemSpec, true_model: GaussianModel) -> ReformulatedProgram:
    """Convex program with known moments and the one-sided Vysochanskij-Petunin bound
    """

    _check_disturbance_dim(spec, true_model.dim)

    # ModelError for covariances that are not PSD
    true_model.factor()

    dynamics = concatenate(spec.system, spec.horizon)
    constants = row_constants(spec, dynamics, true_model.mean, true_model.covariance, OSVPI_FLOOR)

    logger.debug("Built OSVPI program: %d rows", constants.rows.shape[0])

    return ReformulatedProgram(
        method=METHOD_OSVPI,
        rows=constants.rows,
        sigma=constants.sigma,
        rhs=constants.rhs,
        labels=constants.labels,
        risk_budget=spec.alpha,
        lambda_floor=OSVPI_FLOOR,
        **_input_program(spec),
    )


def build_scenario(spec: ProblemSpec, samples: SampleSet) -> ScenarioProgram:
    """One linear row G_ik (A^k x0 + C(k) U + D(k) W_j) <= h_ik per sample W_j
    """

    _check_disturbance_dim(spec, samples.dim)

    dynamics = concatenate(spec.system, spec.horizon)
    count = samples.count

    blocks, rhs, labels = [], [], []
    for row in spec.target_set.rows():
        k = row.step
        coeffs = row.normal @ dynamics.input_map(k)
        base = float(row.normal @ dynamics.power(k) @ spec.x0)
        shifts = samples.samples @ (row.normal @ dynamics.disturbance_map(k))

        blocks.append(np.broadcast_to(coeffs, (count, coeffs.size)))
        rhs.append(row.bound - base - shifts)
        labels.append(np.column_stack([np.full(count, k), np.full(count, row.index), np.arange(count)]))

    logger.debug("Built scenario program: %d rows from %d samples", count * spec.target_set.total, count)

    return ScenarioProgram(
        rows=np.vstack(blocks),
        rhs=np.concatenate(rhs),
        labels=np.vstack(labels),
        n_samples=count,
        **_input_program(spec),
    )


def scenario_sample_count(alpha: float, beta: float, n_opt: int) -> int:
    """Scenario sample count ceil((2 / alpha) (ln(1 / beta) + n_opt))
    """

    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if n_opt < 1:
        raise DomainError(f"the number of decision variables must be positive, got {n_opt}")

    return math.ceil((2.0 / alpha) * (math.log(1.0 / beta) + n_opt))
