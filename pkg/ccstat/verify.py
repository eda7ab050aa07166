# -*- coding: utf-8 -*-

"""Monte-Carlo certification of open-loop inputs and empirical checks of the tail bounds
"""

from typing import Iterable, Optional, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
import csv
import logging
import math

import numpy as np
from pydantic import root_validator, validator

from .concentration import OSVPI_FLOOR, BoundContext, f, lambda_min, osvpi_bound
from .config import verify_threads
from .constants import SUBSTREAM_BLOCK
from .dynamics import concatenate
from .errors import ArtifactError, DomainError, NumericalError, StructuralError
from .models import ArrayModel, DocumentModel
from .problem import ProblemSpec
from .sampling import (
    STREAM_CERTIFY,
    STREAM_IN_SAMPLE,
    STREAM_OUT_OF_SAMPLE,
    GaussianModel,
    block_ranges,
    gaussian_rows,
    standard_normal_rows,
)


logger = logging.getLogger(__name__)

# Binomial standard errors allowed above a bound before a cell fails
PASS_SIGMAS = 3.0


class RowViolation(ArrayModel):
    step: int
    index: int
    violation: float


class CertificationReport(DocumentModel):
    """Empirical joint satisfaction of ``trials`` fresh disturbance draws
    """

    trials: int
    joint_satisfaction: float
    per_row_violation: list[RowViolation]
    stderr: float
    seed: int

    @validator('trials')
    def _check_trials(cls, value):
        if value < 1:
            raise ValueError(f"trials must be positive, got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _check_consistency(cls, values):
        rows = values['per_row_violation']
        if rows:
            ceiling = min(1.0 - r.violation for r in rows) + 1.0 / values['trials']
            if values['joint_satisfaction'] > ceiling:
                raise ValueError("joint satisfaction exceeds the satisfaction of a single row")
        return values

    @property
    def violations(self) -> int:
        return round((1.0 - self.joint_satisfaction) * self.trials)

    def lower_confidence(self, sigmas: float = PASS_SIGMAS) -> float:
        return self.joint_satisfaction - sigmas * self.stderr


class ValidationCell(ArrayModel):
    """One (N_s, lambda) cell of a tail-bound experiment
    """

    n_samples: int
    lambda_: float
    trials: int
    empirical: float
    bound: float
    stderr: float
    passed: bool


def binomial_stderr(probability: float, trials: int) -> float:
    return math.sqrt(max(probability * (1.0 - probability), 0.0) / trials)


class _BlockCounts(ArrayModel):
    satisfied: int
    any_violated: int
    row_violations: np.ndarray


def certify(spec: ProblemSpec,
            inputs: np.ndarray,
            model: GaussianModel,
            trials: int,
            seed: int,
            threads: Optional[int] = None) -> CertificationReport:
    """Estimate P(x(k) in T(k) for every k) under ``model`` for fixed inputs

    Trial i uses row i of the certification substream of ``seed``, so the report does not
    depend on the number of worker threads. Boundary hits count as satisfied.
    """

    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    if inputs.size != spec.n_inputs:
        raise StructuralError(f"inputs must have length {spec.n_inputs}, got {inputs.size}")
    if model.dim != spec.horizon * spec.system.n:
        raise StructuralError(f"model dimension {model.dim} does not match N*n = {spec.horizon * spec.system.n}")
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")

    lower, upper = spec.stacked_bounds()
    if np.any(inputs < lower - 1e-9) or np.any(inputs > upper + 1e-9):
        logger.warning("Certified inputs are outside the input box")

    dynamics = concatenate(spec.system, spec.horizon)
    rows = list(spec.target_set.rows())

    # G x(k) = offset + G D(k) W for each target row
    offsets = np.array([r.normal @ (dynamics.power(r.step) @ spec.x0 + dynamics.input_map(r.step) @ inputs)
                        for r in rows])
    shifts = np.array([r.normal @ dynamics.disturbance_map(r.step) for r in rows])
    bounds = np.array([r.bound for r in rows])

    def count_block(block: tuple[int, int]) -> _BlockCounts:
        start, stop = block
        draws = gaussian_rows(model, seed, STREAM_CERTIFY, start, stop - start)
        values = offsets + draws @ shifts.T
        met = values <= bounds

        # union of the per-row exceedances, one row at a time
        violated = np.zeros(draws.shape[0], dtype=bool)
        for column, bound in zip(values.T, bounds):
            violated |= column > bound

        return _BlockCounts(
            satisfied=int(np.count_nonzero(met.all(axis=1))),
            any_violated=int(np.count_nonzero(violated)),
            row_violations=(~met).sum(axis=0),
        )

    workers = threads or verify_threads()
    blocks = list(block_ranges(trials))
    logger.debug("Certifying %d trials in %d blocks on %d threads", trials, len(blocks), workers)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        counts = list(executor.map(count_block, blocks))

    satisfied = sum(c.satisfied for c in counts)
    any_violated = sum(c.any_violated for c in counts)
    row_violations = np.sum([c.row_violations for c in counts], axis=0)

    if satisfied != trials - any_violated:
        raise NumericalError(f"joint satisfaction counts disagree: {satisfied} satisfied, {any_violated} violated "
                             f"of {trials}")

    joint = satisfied / trials
    logger.info("Certified %d trials: joint satisfaction %.6f", trials, joint)

    return CertificationReport(
        trials=trials,
        joint_satisfaction=joint,
        per_row_violation=[
            RowViolation(step=r.step, index=r.index, violation=float(v) / trials)
            for r, v in zip(rows, row_violations)
        ],
        stderr=binomial_stderr(joint, trials),
        seed=seed,
    )


def _cell_start(cell: int, trials: int) -> int:
    """First substream row of a cell; cells never share a block
    """

    return cell * math.ceil(trials / SUBSTREAM_BLOCK) * SUBSTREAM_BLOCK


def _tail_count(seed: int, stream: int, start: int, trials: int, n_samples: int, lam: float,
                out_of_sample: bool) -> int:
    hits = 0
    width = n_samples + 1 if out_of_sample else n_samples

    for lo, hi in block_ranges(trials):
        draws = standard_normal_rows(seed, stream, start + lo, hi - lo, width)
        samples = draws[:, :n_samples]
        tested = draws[:, n_samples] if out_of_sample else draws[:, 0]
        mean = samples.mean(axis=1)
        std = samples.std(axis=1)
        hits += int(np.count_nonzero(tested - mean >= lam * std))

    return hits


def _cell(n_samples: int, lam: float, trials: int, hits: int, bound: float) -> ValidationCell:
    empirical = hits / trials
    stderr = binomial_stderr(bound, trials)

    return ValidationCell(
        n_samples=n_samples,
        lambda_=lam,
        trials=trials,
        empirical=empirical,
        bound=bound,
        stderr=stderr,
        passed=empirical <= bound + PASS_SIGMAS * stderr,
    )


def validate_out_of_sample(n_samples_grid: Sequence[int],
                           lambda_grid: Iterable[float],
                           trials: int,
                           seed: int) -> list[ValidationCell]:
    """Out-of-sample tail of a fresh Gaussian draw against the sample-based bound f

    Each experiment draws N_s samples and one fresh point; the tail event is
    x - mean >= lambda * std with the biased sample std.
    """

    lambdas = list(lambda_grid)
    cells = []

    for n_samples in n_samples_grid:
        ctx = BoundContext(n_samples=n_samples)
        floor = lambda_min(ctx)
        for lam in lambdas:
            if lam <= floor:
                raise DomainError(f"lambda = {lam} is not above lambda_min({n_samples}) = {floor:.6g}")

    for n_samples in n_samples_grid:
        ctx = BoundContext(n_samples=n_samples)
        for lam in lambdas:
            start = _cell_start(len(cells), trials)
            hits = _tail_count(seed, STREAM_OUT_OF_SAMPLE, start, trials, n_samples, lam, out_of_sample=True)
            cells.append(_cell(n_samples, lam, trials, hits, f(ctx, lam)))
            logger.debug("Out-of-sample cell N_s=%d lambda=%.4g: %.5f vs bound %.5f",
                         n_samples, lam, cells[-1].empirical, cells[-1].bound)

    return cells


def validate_in_sample(n_samples_grid: Sequence[int],
                       lambda_grid: Iterable[float],
                       trials: int,
                       seed: int) -> list[ValidationCell]:
    """In-sample tail (the tested point is one of the N_s samples) against 4 / (9 (lambda^2 + 1))
    """

    lambdas = list(lambda_grid)
    for lam in lambdas:
        if not lam > OSVPI_FLOOR:
            raise DomainError(f"lambda must exceed sqrt(5/3) = {OSVPI_FLOOR:.6f}, got {lam}")
    for n_samples in n_samples_grid:
        if n_samples < 2:
            raise DomainError(f"in-sample experiments need at least 2 samples, got {n_samples}")

    cells = []
    for n_samples in n_samples_grid:
        for lam in lambdas:
            start = _cell_start(len(cells), trials)
            hits = _tail_count(seed, STREAM_IN_SAMPLE, start, trials, n_samples, lam, out_of_sample=False)
            cells.append(_cell(n_samples, lam, trials, hits, osvpi_bound(lam)))

    return cells


def write_certification_csv(report: CertificationReport, path: Path):
    """One ``step,index,violation`` line per target row
    """

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(['step', 'index', 'violation'])
            for row in report.per_row_violation:
                writer.writerow([row.step, row.index, repr(row.violation)])
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err


def write_validation_csv(cells: Sequence[ValidationCell], path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(['n_samples', 'lambda', 'trials', 'empirical', 'bound', 'stderr', 'passed'])
            for cell in cells:
                writer.writerow([cell.n_samples, repr(cell.lambda_), cell.trials, repr(cell.empirical),
                                 repr(cell.bound), repr(cell.stderr), int(cell.passed)])
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err
