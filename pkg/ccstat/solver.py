# -*- coding: utf-8 -*-

"""Log-barrier interior-point solver for the reformulated and scenario programs

Both program kinds are solved over z = [U, lambda] (lambda empty for the scenario
program) as::

    minimize    U^T Q U
    subject to  A z <= b                   (target rows, input set, lambda floors)
                sum_j r(lambda_j) <= budget  (risk row, reformulated programs only)

A phase I problem with one shared slack on the target and input-polytope rows finds a
strictly feasible start; the barrier path is then followed with damped Newton steps on a
diagonally scaled system. Once the barrier gap is small, the near-active constraints are
solved as equalities and a point is accepted only if the independent KKT check passes.
"""

from typing import Callable, NamedTuple, Optional, Union
from enum import Enum
import logging
import time

import numpy as np
from omegaconf import OmegaConf
from pydantic import Field, validator
import scipy.linalg
import scipy.optimize

from .concentration import RiskMap
from .config import config
from .errors import DomainError, InfeasibleTargetError, LambdaBoundaryError, StructuralError
from .models import ArrayModel, DocumentModel, as_array
from .reformulation import InputProgram, ReformulatedProgram, ScenarioProgram


logger = logging.getLogger(__name__)

# Centering stops when half the squared Newton decrement falls below this
CENTERING_TOL = 1e-10

# A line search without progress still counts as centered below this
STALL_TOL = 1e-6

ARMIJO_ALPHA = 0.25
BACKTRACK_BETA = 0.5
MAX_BACKTRACK = 60

BARRIER_T0 = 1.0
BARRIER_T_MAX = 1e16

# Polishing starts once m / t <= POLISH_GAP * (1 + |cost|)
POLISH_GAP = 1e-4
POLISH_STEPS = 20

# Diagonal shift of the scaled Newton system
NEWTON_SHIFT = 1e-12

# Constraints with slack below ACTIVE_TOL * (1 + |b|) enter the KKT check
ACTIVE_TOL = 1e-3

# The initial lambdas spend this share of the per-row budget above the map's limit
INITIAL_RISK_SHARE = 0.5


class SolveStatus(str, Enum):
    optimal = 'optimal'
    infeasible = 'infeasible'
    iter_limit = 'iter_limit'


class SolverConfig(ArrayModel):
    """Barrier solver settings
    """

    kkt_tol: float = 1e-8
    max_iter: int = 200
    barrier_mu_factor: float = 10.0
    feas_tol: float = 1e-9
    lambda_floor_margin: float = 1e-9

    @validator('kkt_tol', 'max_iter', 'feas_tol', 'lambda_floor_margin')
    def _check_positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"'{field.name}' must be positive, got {value}")
        return value

    @validator('barrier_mu_factor')
    def _check_mu(cls, value):
        if value <= 1.0:
            raise ValueError(f"'barrier_mu_factor' must exceed 1, got {value}")
        return value

    @classmethod
    def from_config(cls, **overrides) -> 'SolverConfig':
        settings = OmegaConf.to_container(config.solver, resolve=True)
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


class KktResiduals(ArrayModel):
    primal: float
    stationarity: float
    complementarity: float

    def max(self) -> float:
        return max(self.primal, self.stationarity, self.complementarity)

    def within(self, cfg: SolverConfig) -> bool:
        return (self.primal <= cfg.feas_tol
                and self.stationarity <= cfg.kkt_tol
                and self.complementarity <= cfg.kkt_tol)


class Solution(DocumentModel):
    """Result of a solve

    ``lambda_`` (``lambda`` in JSON) has one entry per target row; rows with sigma = 0
    report the lambda floor and scenario solutions carry None. ``most_violated`` names
    the target row (step, index[, sample]) that phase I could not satisfy.
    """

    method: str
    U: np.ndarray
    lambda_: Optional[list[Optional[float]]] = Field(None, alias='lambda')
    cost: Optional[float] = None
    status: SolveStatus
    residuals: KktResiduals
    solve_seconds: float
    iterations: int = 0
    outer_objectives: list[float] = []
    most_violated: Optional[list[int]] = None
    message: Optional[str] = None
    n_samples: Optional[int] = None

    @validator('U', pre=True)
    def _check_inputs(cls, value):
        return as_array(value, ndim=1, name='U')

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.optimal

    def lambda_array(self) -> np.ndarray:
        """Risk variables as floats, NaN where absent
        """

        if self.lambda_ is None:
            return np.zeros(0)
        return np.array([np.nan if v is None else v for v in self.lambda_], dtype=float)


class LogBarrier:
    """Log-barrier of  z^T P z + c^T z  over  A z <= b  and an optional risk row
    """

    def __init__(self,
                 a: np.ndarray,
                 b: np.ndarray,
                 quad: np.ndarray,
                 lin: np.ndarray,
                 risk: Optional[RiskMap] = None,
                 risk_index: Optional[np.ndarray] = None,
                 budget: float = 0.0):
        self.a = a
        self.b = b
        self.quad = quad
        self.lin = lin
        self.risk = risk
        self.risk_index = np.zeros(0, dtype=int) if risk_index is None else risk_index
        self.budget = budget

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    @property
    def has_risk(self) -> bool:
        return self.risk is not None and self.risk_index.size > 0

    @property
    def count(self) -> int:
        """Number of inequality constraints
        """

        return self.a.shape[0] + (1 if self.has_risk else 0)

    def cost(self, z: np.ndarray) -> float:
        return float(z @ self.quad @ z + self.lin @ z)

    def slack(self, z: np.ndarray) -> np.ndarray:
        return self.b - self.a @ z

    def risk_slack(self, z: np.ndarray) -> float:
        if not self.has_risk:
            return np.inf
        return float(self.budget - np.sum(self.risk.value(z[self.risk_index])))

    def feasible(self, z: np.ndarray) -> bool:
        if not np.all(np.isfinite(z)) or not np.all(self.slack(z) > 0.0):
            return False
        if not self.has_risk:
            return True
        if not np.all(z[self.risk_index] > self.risk.floor):
            return False
        return self.risk_slack(z) > 0.0

    def check_convexity(self, z: np.ndarray):
        if self.has_risk:
            self.risk.check_region(z[self.risk_index])

    def value(self, z: np.ndarray, t: float) -> float:
        result = t * self.cost(z) - np.sum(np.log(self.slack(z)))
        if self.has_risk:
            result -= np.log(self.risk_slack(z))
        return float(result)

    def risk_gradient(self, z: np.ndarray) -> np.ndarray:
        grad = np.zeros(self.dim)
        grad[self.risk_index] = self.risk.derivative(z[self.risk_index])
        return grad

    def derivatives(self, z: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        inv = 1.0 / self.slack(z)

        grad = t * (2.0 * self.quad @ z + self.lin) + self.a.T @ inv
        hess = 2.0 * t * self.quad + (self.a.T * inv ** 2) @ self.a

        if self.has_risk:
            gs = self.risk_slack(z)
            risk_grad = self.risk_gradient(z)

            grad += risk_grad / gs
            hess += np.outer(risk_grad, risk_grad) / gs ** 2
            hess[self.risk_index, self.risk_index] += np.asarray(
                self.risk.second_derivative(z[self.risk_index])) / gs

        return grad, hess


class _PathResult(NamedTuple):
    z: np.ndarray
    state: str
    iterations: int
    objectives: list[float]


def _newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Newton direction from the Jacobi-scaled system, steepest descent if that fails
    """

    diag = np.abs(np.diag(hess))
    scale = 1.0 / np.sqrt(np.maximum(diag, 1e-30 * max(diag.max(initial=0.0), 1.0)))
    scaled = hess * np.outer(scale, scale)
    scaled[np.diag_indices_from(scaled)] += NEWTON_SHIFT

    try:
        factor = scipy.linalg.cho_factor(scaled, check_finite=False)
        step = scale * scipy.linalg.cho_solve(factor, -scale * grad, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        step = scale * scipy.linalg.lstsq(scaled, -scale * grad, check_finite=False)[0]

    if not np.all(np.isfinite(step)) or float(grad @ step) >= 0.0:
        step = -scale ** 2 * grad

    return step


def _line_search(barrier: LogBarrier, z: np.ndarray, t: float, grad: np.ndarray, step: np.ndarray) -> Optional[float]:
    """Backtracking: shrink into the domain, then until the Armijo condition holds
    """

    size = 1.0
    base = barrier.value(z, t)
    slope = float(grad @ step)

    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        for _ in range(MAX_BACKTRACK):
            candidate = z + size * step
            if barrier.feasible(candidate) and barrier.value(candidate, t) <= base + ARMIJO_ALPHA * size * slope:
                return size
            size *= BACKTRACK_BETA

    return None


def _center(barrier: LogBarrier, z: np.ndarray, t: float, cfg: SolverConfig) -> tuple[np.ndarray, str, int]:
    """Damped Newton on the barrier at weight t

    States: 'centered', 'stalled' (no descent with a large decrement) or 'iter_limit'.
    """

    for iteration in range(cfg.max_iter):
        grad, hess = barrier.derivatives(z, t)
        step = _newton_step(hess, grad)
        decrement = -float(grad @ step)

        if decrement / 2.0 <= CENTERING_TOL:
            return z, 'centered', iteration

        size = _line_search(barrier, z, t, grad, step)
        if size is None:
            return z, 'centered' if decrement / 2.0 <= STALL_TOL else 'stalled', iteration

        z = z + size * step
        barrier.check_convexity(z)

    return z, 'iter_limit', cfg.max_iter


Verdict = Optional[tuple[str, np.ndarray]]


def _follow_path(barrier: LogBarrier,
                 z: np.ndarray,
                 cfg: SolverConfig,
                 accept: Callable[[np.ndarray, float], Verdict]) -> _PathResult:
    """Center for growing t until ``accept`` returns a (state, point) verdict

    Ends with 'gap_closed' once t passes BARRIER_T_MAX without a verdict.
    """

    t = BARRIER_T0
    objectives = []
    total = 0

    while t <= BARRIER_T_MAX:
        z, state, iterations = _center(barrier, z, t, cfg)
        total += iterations

        if state != 'centered':
            return _PathResult(z, state, total, objectives)

        objectives.append(barrier.cost(z))
        logger.debug("Barrier t=%.3g: objective %.10g after %d Newton steps", t, objectives[-1], iterations)

        verdict = accept(z, t)
        if verdict is not None:
            state, point = verdict
            return _PathResult(point, state, total, objectives)

        t *= cfg.barrier_mu_factor

    return _PathResult(z, 'gap_closed', total, objectives)


def _find_interior(barrier: LogBarrier, z0: np.ndarray, soft: int, cfg: SolverConfig) -> _PathResult:
    """Phase I: minimize s subject to A_soft z - s <= b_soft and the hard constraints

    The state is 'feasible' at a centered point with s < 0 and 'infeasible' once the
    centered s exceeds the barrier gap m / t (or the gap closes with s >= 0).
    """

    violation = barrier.a[:soft] @ z0 - barrier.b[:soft]
    if soft == 0 or violation.max() < 0.0:
        return _PathResult(z0, 'feasible', 0, [])

    column = np.zeros((barrier.a.shape[0], 1))
    column[:soft] = -1.0

    dim = barrier.dim + 1
    lin = np.zeros(dim)
    lin[-1] = 1.0

    phase = LogBarrier(np.hstack([barrier.a, column]), barrier.b, np.zeros((dim, dim)), lin,
                       barrier.risk, barrier.risk_index, barrier.budget)

    def accept(z: np.ndarray, t: float) -> Verdict:
        if z[-1] < 0.0:
            return 'feasible', z
        if z[-1] - phase.count / t > cfg.feas_tol:
            return 'infeasible', z
        return None

    start = np.append(z0, max(float(violation.max()), 0.0) + 1.0)
    result = _follow_path(phase, start, cfg, accept)

    logger.debug("Phase I: %s after %d Newton steps (slack %.3g)", result.state, result.iterations, result.z[-1])

    state = 'infeasible' if result.state == 'gap_closed' else result.state
    return _PathResult(result.z[:-1], state, result.iterations, [])


def _polish(barrier: LogBarrier, z: np.ndarray, t: float) -> Optional[np.ndarray]:
    """Solve the near-active constraints of a barrier point as equalities

    A constraint is near-active when its slack s satisfies s^2 t < 1, i.e. s is below
    its barrier multiplier 1 / (t s). Newton steps on the equality-constrained KKT
    system start from the barrier multipliers. None when the system cannot be solved.
    """

    slack = barrier.slack(z)
    active = np.flatnonzero(slack * slack * t < 1.0)
    gs = barrier.risk_slack(z)
    risk_active = barrier.has_risk and gs * gs * t < 1.0

    if active.size == 0 and not risk_active:
        return None

    mult = 1.0 / (t * slack[active])
    nu = 1.0 / (t * gs) if risk_active else 0.0
    z = z.copy()
    dim = barrier.dim

    try:
        for _ in range(POLISH_STEPS):
            hess = 2.0 * barrier.quad
            jac = barrier.a[active]
            residual = jac @ z - barrier.b[active]
            grad = 2.0 * barrier.quad @ z + barrier.lin + jac.T @ mult

            if risk_active:
                lam = z[barrier.risk_index]
                risk_grad = barrier.risk_gradient(z)
                grad = grad + nu * risk_grad
                hess[barrier.risk_index, barrier.risk_index] += nu * np.asarray(barrier.risk.second_derivative(lam))
                jac = np.vstack([jac, risk_grad])
                residual = np.append(residual, np.sum(barrier.risk.value(lam)) - barrier.budget)

            k = jac.shape[0]
            kkt = np.block([[hess, jac.T], [jac, np.zeros((k, k))]])
            columns = np.linalg.norm(kkt, axis=0)
            columns[columns == 0.0] = 1.0

            delta = scipy.linalg.lstsq(kkt / columns, -np.concatenate([grad, residual]))[0] / columns

            z = z + delta[:dim]
            mult = mult + delta[dim:dim + active.size]
            if risk_active:
                nu += delta[-1]

            if np.linalg.norm(delta[:dim]) <= 1e-15 * (1.0 + np.linalg.norm(z)):
                break
    except (DomainError, scipy.linalg.LinAlgError, ValueError, FloatingPointError):
        return None

    if not np.all(np.isfinite(z)):
        return None
    return z


def _box_rows(program: InputProgram, dim: int) -> tuple[np.ndarray, np.ndarray]:
    lower, upper = program.lower, program.upper
    if np.any(lower >= upper):
        raise StructuralError("the barrier solver needs lo < hi for every input component")

    n = program.n_inputs
    a = np.zeros((2 * n, dim))
    a[:n, :n] = np.eye(n)
    a[n:, :n] = -np.eye(n)

    return a, np.concatenate([upper, -lower])


def _polytope_rows(program: InputProgram, dim: int) -> np.ndarray:
    a = np.zeros((program.input_rows.shape[0], dim))
    a[:, :program.n_inputs] = program.input_rows
    return a


def _quadratic(program: InputProgram, dim: int) -> np.ndarray:
    quad = np.zeros((dim, dim))
    quad[:program.n_inputs, :program.n_inputs] = program.objective
    return quad


def _box_center(program: InputProgram) -> np.ndarray:
    return 0.5 * (program.lower + program.upper)


def initial_lambda(risk: RiskMap, floor: float, budget: float, count: int) -> float:
    """Uniform risk allocation, halfway between the map's limit and budget / count

    Raises
    ------
    InfeasibleTargetError : budget / count does not exceed the map's limit.

    """

    per_row = budget / count
    if per_row <= risk.limit:
        raise InfeasibleTargetError(
            f"a per-row risk of {per_row:g} is not above the {risk.name} limit {risk.limit:g}")

    share = risk.limit + INITIAL_RISK_SHARE * (per_row - risk.limit)
    try:
        lam = risk.inverse(share)
    except LambdaBoundaryError:
        # r(floor) <= share already
        lam = floor
    return max(lam, 1.01 * floor)


class BarrierSetup(NamedTuple):
    """A program cast to the barrier form with its strictly interior start in the hard rows
    """

    barrier: LogBarrier
    z0: np.ndarray
    soft: int
    unpack: Callable[[np.ndarray], Optional[list]]


def proposed_barrier(program: ReformulatedProgram, cfg: SolverConfig) -> BarrierSetup:
    """Barrier over [U, lambda of the rows with sigma > 0]

    Raises
    ------
    InfeasibleTargetError : The risk budget left after the sigma = 0 rows cannot be split.

    """

    risk = program.risk_map()
    n_inputs = program.n_inputs
    random_rows = np.flatnonzero(program.random_rows)
    count = random_rows.size
    dim = n_inputs + count
    lambda_index = n_inputs + np.arange(count)

    floor = program.lambda_floor * (1.0 + cfg.lambda_floor_margin)
    budget = program.risk_budget - program.deterministic_charge()

    target = np.zeros((program.n_rows, dim))
    target[:, :n_inputs] = program.rows
    target[random_rows, lambda_index] = program.sigma[random_rows]

    floors = np.zeros((count, dim))
    floors[np.arange(count), lambda_index] = -1.0

    box_a, box_b = _box_rows(program, dim)
    a = np.vstack([target, _polytope_rows(program, dim), box_a, floors])
    b = np.concatenate([program.rhs, program.input_rhs, box_b, -floor * np.ones(count)])
    soft = program.n_rows + program.input_rows.shape[0]

    def unpack(z: np.ndarray) -> list[Optional[float]]:
        lambdas: list[Optional[float]] = [float(program.lambda_floor)] * program.n_rows
        for row, value in zip(random_rows, z[n_inputs:n_inputs + count]):
            lambdas[row] = float(value)
        return lambdas

    z0 = _box_center(program)

    if count == 0:
        if budget < 0.0:
            raise InfeasibleTargetError(
                f"rows with a fixed lambda exhaust the risk budget ({program.deterministic_charge():g} "
                f"> {program.risk_budget:g})")
        barrier = LogBarrier(a, b, _quadratic(program, dim), np.zeros(dim))
        return BarrierSetup(barrier, z0, soft, unpack)

    lam0 = initial_lambda(risk, floor, budget, count)
    barrier = LogBarrier(a, b, _quadratic(program, dim), np.zeros(dim), risk, lambda_index, budget)

    return BarrierSetup(barrier, np.concatenate([z0, lam0 * np.ones(count)]), soft, unpack)


def scenario_barrier(program: ScenarioProgram) -> BarrierSetup:
    dim = program.n_inputs
    box_a, box_b = _box_rows(program, dim)
    a = np.vstack([program.rows, _polytope_rows(program, dim), box_a])
    b = np.concatenate([program.rhs, program.input_rhs, box_b])
    soft = program.n_rows + program.input_rows.shape[0]

    barrier = LogBarrier(a, b, _quadratic(program, dim), np.zeros(dim))
    return BarrierSetup(barrier, _box_center(program), soft, lambda z: None)


_STOP_MESSAGES = {
    'iter_limit': 'Newton step cap reached while centering',
    'stalled': 'line search stalled before the barrier problem was centered',
    'gap_closed': 'KKT residuals stayed above kkt_tol up to the largest barrier weight',
}


def _infeasible(program: Union[ReformulatedProgram, ScenarioProgram],
                inputs: np.ndarray,
                lambdas: Optional[list],
                started: float,
                iterations: int,
                message: str,
                label: Optional[np.ndarray] = None) -> Solution:
    logger.info("%s: infeasible (%s)", program.method, message)

    return Solution(
        method=program.method,
        U=inputs,
        lambda_=lambdas,
        status=SolveStatus.infeasible,
        residuals=kkt_residuals(program, inputs, lambdas),
        solve_seconds=time.perf_counter() - started,
        iterations=iterations,
        most_violated=None if label is None else [int(v) for v in label],
        message=message,
        n_samples=program.n_samples,
    )


def _solve(program: Union[ReformulatedProgram, ScenarioProgram],
           setup: BarrierSetup,
           cfg: SolverConfig,
           started: float) -> Solution:
    barrier, soft, unpack = setup.barrier, setup.soft, setup.unpack
    n_inputs = program.n_inputs

    interior = _find_interior(barrier, setup.z0, soft, cfg)
    iterations = interior.iterations

    if interior.state == 'infeasible':
        index = int(np.argmax(barrier.a[:soft] @ interior.z - barrier.b[:soft]))
        label = program.labels[index] if index < program.n_rows else None
        row_name = 'input polytope row' if label is None else f'target row {tuple(int(v) for v in label)}'
        return _infeasible(program, interior.z[:n_inputs], unpack(interior.z), started, iterations,
                           f"no strictly feasible point; most violated: {row_name}", label)

    def within_tolerance(z: np.ndarray) -> bool:
        try:
            return kkt_residuals(program, z[:n_inputs], unpack(z)).within(cfg)
        except DomainError:
            # a polished lambda left the domain of the risk map
            return False

    def accept(z: np.ndarray, t: float) -> Verdict:
        if barrier.count / t > POLISH_GAP * (1.0 + abs(barrier.cost(z))):
            return None
        for candidate in (_polish(barrier, z, t), z):
            if candidate is not None and within_tolerance(candidate):
                return 'optimal', candidate
        return None

    if interior.state == 'feasible':
        path = _follow_path(barrier, interior.z, cfg, accept)
        iterations += path.iterations
    else:
        path = _PathResult(interior.z, interior.state, iterations, [])

    z = path.z
    inputs = z[:n_inputs]
    lambdas = unpack(z)
    cost = program.cost(inputs)
    residuals = kkt_residuals(program, inputs, lambdas)
    objectives = list(path.objectives)

    if path.state == 'optimal':
        status, message = SolveStatus.optimal, None
        if not objectives or objectives[-1] != cost:
            objectives.append(cost)
    else:
        status = SolveStatus.iter_limit
        phase = 'phase I' if interior.state != 'feasible' else 'phase II'
        message = f"{phase}: {_STOP_MESSAGES.get(path.state, path.state)}"

    seconds = time.perf_counter() - started
    logger.info("%s: %s, cost %.6g, %d Newton steps, %.3f s", program.method, status.value, cost, iterations, seconds)
    if message:
        logger.warning("%s: %s (residuals %s)", program.method, message, residuals)

    return Solution(
        method=program.method,
        U=inputs,
        lambda_=lambdas,
        cost=cost,
        status=status,
        residuals=residuals,
        solve_seconds=seconds,
        iterations=iterations,
        outer_objectives=objectives,
        message=message,
        n_samples=program.n_samples,
    )


def solve_proposed(program: ReformulatedProgram, cfg: Optional[SolverConfig] = None) -> Solution:
    """Solve a reformulated program (proposed or OSVPI)

    Rows with sigma = 0 keep lambda at the floor and are charged the risk map's value
    there. An ``iter_limit`` solution carries the last iterate of the path.
    """

    cfg = cfg or SolverConfig.from_config()
    started = time.perf_counter()

    try:
        setup = proposed_barrier(program, cfg)
    except InfeasibleTargetError as err:
        inputs = _box_center(program)
        lambdas = [float(program.lambda_floor * (1.0 + cfg.lambda_floor_margin))] * program.n_rows
        return _infeasible(program, inputs, lambdas, started, 0, f"risk budget cannot be split: {err}")

    logger.debug("Solving %s program: %d inputs, %d risk variables, %d linear rows",
                 program.method, program.n_inputs, setup.barrier.risk_index.size, setup.barrier.a.shape[0])

    return _solve(program, setup, cfg, started)


def solve_scenario(program: ScenarioProgram, cfg: Optional[SolverConfig] = None) -> Solution:
    """Solve the sampled program; the same barrier core with an empty lambda block
    """

    cfg = cfg or SolverConfig.from_config()
    started = time.perf_counter()

    setup = scenario_barrier(program)
    logger.debug("Solving scenario program: %d inputs, %d linear rows", program.n_inputs, setup.barrier.a.shape[0])

    return _solve(program, setup, cfg, started)


def solve(program: Union[ReformulatedProgram, ScenarioProgram], cfg: Optional[SolverConfig] = None) -> Solution:
    if isinstance(program, ScenarioProgram):
        return solve_scenario(program, cfg)
    return solve_proposed(program, cfg)


class _Constraints(NamedTuple):
    values: np.ndarray  # g(z), feasible when <= 0
    jacobian: np.ndarray
    scale: np.ndarray


def _constraints(program: Union[ReformulatedProgram, ScenarioProgram],
                 inputs: np.ndarray,
                 lambdas: Optional[list]) -> tuple[_Constraints, np.ndarray]:
    """All constraints of a program at (U, lambda) with their gradients, and z
    """

    n = program.n_inputs
    eye = np.eye(n)

    if isinstance(program, ScenarioProgram):
        lam = np.zeros(0)
        random_rows = np.zeros(0, dtype=int)
    else:
        random_rows = np.flatnonzero(program.random_rows)
        lam = np.array([lambdas[row] for row in random_rows], dtype=float)

    count = lam.size
    dim = n + count
    z = np.concatenate([inputs, lam])

    blocks = []

    # target rows
    jac = np.zeros((program.n_rows, dim))
    jac[:, :n] = program.rows
    if count:
        jac[random_rows, n + np.arange(count)] = program.sigma[random_rows]
    blocks.append((jac @ z - program.rhs, jac, program.rhs))

    # input set
    poly = np.zeros((program.input_rows.shape[0], dim))
    poly[:, :n] = program.input_rows
    blocks.append((poly @ z - program.input_rhs, poly, program.input_rhs))

    box = np.zeros((2 * n, dim))
    box[:n, :n] = eye
    box[n:, :n] = -eye
    box_rhs = np.concatenate([program.upper, -program.lower])
    blocks.append((box @ z - box_rhs, box, box_rhs))

    if count:
        floors = np.zeros((count, dim))
        floors[np.arange(count), n + np.arange(count)] = -1.0
        floor_rhs = -program.lambda_floor * np.ones(count)
        blocks.append((floors @ z - floor_rhs, floors, floor_rhs))

        risk = program.risk_map()
        budget = program.risk_budget - program.deterministic_charge()
        risk_row = np.zeros((1, dim))
        risk_row[0, n:] = risk.derivative(lam)
        value = float(np.sum(risk.value(lam))) - budget
        blocks.append((np.array([value]), risk_row, np.array([budget])))

    values = np.concatenate([blk[0] for blk in blocks])
    jacobian = np.vstack([blk[1] for blk in blocks])
    scale = 1.0 + np.abs(np.concatenate([blk[2] for blk in blocks]))

    return _Constraints(values, jacobian, scale), z


def kkt_residuals(program: Union[ReformulatedProgram, ScenarioProgram],
                  inputs: np.ndarray,
                  lambdas: Optional[list] = None) -> KktResiduals:
    """KKT residuals of (U, lambda) re-derived from the program data

    Multipliers of the near-active constraints come from nonnegative least squares on
    the stacked stationarity and complementarity equations.
    """

    inputs = np.asarray(inputs, dtype=float)
    cons, z = _constraints(program, inputs, lambdas)

    primal = max(0.0, float(cons.values.max()))

    objective_grad = np.zeros(z.size)
    objective_grad[:program.n_inputs] = 2.0 * program.objective @ inputs

    slack = np.maximum(-cons.values, 0.0)
    candidates = np.flatnonzero(slack <= ACTIVE_TOL * cons.scale)
    cap = max(50, 4 * z.size)
    if candidates.size > cap:
        candidates = candidates[np.argsort(slack[candidates])[:cap]]

    if candidates.size == 0:
        return KktResiduals(primal=primal, stationarity=float(np.abs(objective_grad).max(initial=0.0)),
                            complementarity=0.0)

    jac = cons.jacobian[candidates]
    matrix = np.vstack([jac.T, np.diag(slack[candidates])])
    rhs = np.concatenate([-objective_grad, np.zeros(candidates.size)])
    multipliers, _ = scipy.optimize.nnls(matrix, rhs)

    stationarity = float(np.abs(objective_grad + jac.T @ multipliers).max(initial=0.0))
    complementarity = float(np.abs(multipliers * slack[candidates]).max(initial=0.0))

    return KktResiduals(primal=primal, stationarity=stationarity, complementarity=complementarity)


def kkt_report(program: Union[ReformulatedProgram, ScenarioProgram], solution: Solution) -> KktResiduals:
    """Independent KKT check of a solution against its program
    """

    return kkt_residuals(program, solution.U, solution.lambda_)
