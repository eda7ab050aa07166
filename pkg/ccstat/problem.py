# -*- coding: utf-8 -*-

"""Chance-constrained planning problem: dynamics, inputs, polytopic targets and risk

A problem asks for a stacked input U in the input set such that
P(x(k) in T(k) for every k) >= 1 - alpha, where each T(k) = {x : G_k x <= h_k}.
"""

from typing import Iterator, NamedTuple, Optional
from pathlib import Path

import numpy as np
from pydantic import root_validator, validator
import scipy.optimize

from .dynamics import CwhParameters, LtiSystem, build_cwh
from .errors import StructuralError
from .models import ArrayModel, DocumentModel, as_array, read_document, write_document
from .sampling import GaussianModel


# Probabilistic violation threshold must stay below 1/6
ALPHA_MAX = 1.0 / 6.0


class TargetPolytope(ArrayModel):
    """Half-spaces G x <= h constraining the state at one step
    """

    step: int
    G: np.ndarray
    h: np.ndarray

    @validator('G', pre=True)
    def _check_g(cls, value):
        arr = as_array(value, name='G')
        if arr.ndim == 1:
            arr = as_array(arr.reshape(1, -1), ndim=2, name='G')
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise StructuralError(f"'G' must be a non-empty matrix, got shape {arr.shape}")
        if np.any(np.linalg.norm(arr, axis=1) == 0.0):
            raise StructuralError("every half-space normal must be nonzero")
        return arr

    @validator('h', pre=True)
    def _check_h(cls, value, values):
        arr = as_array(value, ndim=1, name='h')
        if 'G' in values and arr.size != values['G'].shape[0]:
            raise StructuralError(f"'h' must have {values['G'].shape[0]} entries, got {arr.size}")
        return arr

    @property
    def count(self) -> int:
        return self.G.shape[0]

    def is_empty(self) -> bool:
        """Geometric feasibility check of {x : G x <= h}
        """

        n = self.G.shape[1]
        result = scipy.optimize.linprog(np.zeros(n), A_ub=self.G, b_ub=self.h, bounds=[(None, None)] * n,
                                        method='highs')
        return result.status == 2


class TargetRow(NamedTuple):
    step: int
    index: int
    normal: np.ndarray
    bound: float


class TargetSet:
    """Ordered view over the target polytopes of a problem
    """

    def __init__(self, polytopes: list[TargetPolytope]):
        self.polytopes = sorted(polytopes, key=lambda p: p.step)

    def __len__(self) -> int:
        return self.total

    def __iter__(self) -> Iterator[TargetRow]:
        return self.rows()

    @property
    def total(self) -> int:
        """Sum of N_Tk over all steps
        """

        return sum(p.count for p in self.polytopes)

    @property
    def steps(self) -> list[int]:
        return [p.step for p in self.polytopes]

    def rows(self) -> Iterator[TargetRow]:
        """Iterate over half-spaces as (step, index, G_ik, h_ik) in step order
        """

        for polytope in self.polytopes:
            for index in range(polytope.count):
                yield TargetRow(polytope.step, index, polytope.G[index], float(polytope.h[index]))

    def labels(self) -> list[tuple[int, int]]:
        return [(row.step, row.index) for row in self.rows()]


class InputBox(ArrayModel):
    """Per-component bounds lo <= u(k) <= hi applied at every step
    """

    lo: np.ndarray
    hi: np.ndarray

    @validator('lo', 'hi', pre=True)
    def _check_bounds(cls, value, field):
        return as_array(value, ndim=1, name=field.name)

    @root_validator(skip_on_failure=True)
    def _check_order(cls, values):
        lo, hi = values['lo'], values['hi']
        if lo.shape != hi.shape:
            raise StructuralError(f"'lo' and 'hi' must have equal length, got {lo.size} and {hi.size}")
        if np.any(lo > hi):
            raise StructuralError("input box needs lo <= hi componentwise")
        return values


class InputPolytope(ArrayModel):
    """Extra per-step input constraints A u(k) <= b
    """

    A: np.ndarray
    b: np.ndarray

    @validator('A', pre=True)
    def _check_a(cls, value):
        return as_array(value, ndim=2, name='A')

    @validator('b', pre=True)
    def _check_b(cls, value, values):
        arr = as_array(value, ndim=1, name='b')
        if 'A' in values and arr.size != values['A'].shape[0]:
            raise StructuralError(f"'b' must have {values['A'].shape[0]} entries, got {arr.size}")
        return arr


class ProblemSpec(DocumentModel):
    """Open-loop chance-constrained planning problem

    ``objective`` is the weight Q of the cost U^T Q U; None means the identity.
    """

    system: LtiSystem
    horizon: int
    x0: np.ndarray
    input_box: InputBox
    input_polytope: Optional[InputPolytope] = None
    targets: list[TargetPolytope]
    alpha: float
    objective: Optional[np.ndarray] = None

    @validator('x0', pre=True)
    def _check_x0(cls, value):
        return as_array(value, ndim=1, name='x0')

    @validator('objective', pre=True)
    def _check_objective(cls, value):
        if value is None:
            return None
        return as_array(value, ndim=2, name='objective')

    @root_validator(skip_on_failure=True)
    def _check_problem(cls, values):
        system: LtiSystem = values['system']
        horizon = values['horizon']
        n, m = system.n, system.m

        if horizon < 1:
            raise ValueError(f"horizon must be positive, got {horizon}")
        if values['x0'].size != n:
            raise StructuralError(f"'x0' must have length {n}, got {values['x0'].size}")
        if values['input_box'].lo.size != m:
            raise StructuralError(f"input box must have {m} components, got {values['input_box'].lo.size}")

        polytope = values.get('input_polytope')
        if polytope is not None and polytope.A.shape[1] != m:
            raise StructuralError(f"input polytope must have {m} columns, got {polytope.A.shape[1]}")

        if not 0.0 < values['alpha'] < ALPHA_MAX:
            raise ValueError(f"alpha must lie in (0, 1/6), got {values['alpha']}")

        targets: list[TargetPolytope] = values['targets']
        if not targets:
            raise ValueError("at least one target polytope is required")
        steps = [t.step for t in targets]
        if len(set(steps)) != len(steps):
            raise ValueError(f"each step may have one target polytope, got steps {steps}")
        for target in targets:
            if not 1 <= target.step <= horizon:
                raise ValueError(f"target step {target.step} is outside 1..{horizon}")
            if target.G.shape[1] != n:
                raise StructuralError(f"target at step {target.step} must have {n} columns")
            if target.is_empty():
                raise ValueError(f"target polytope at step {target.step} is empty")

        objective = values.get('objective')
        if objective is not None:
            size = horizon * m
            if objective.shape != (size, size):
                raise StructuralError(f"objective weight must be {size}x{size}, got {objective.shape}")
            if not np.allclose(objective, objective.T):
                raise ValueError("objective weight must be symmetric")
            if np.linalg.eigvalsh(objective).min() < -1e-10 * max(1.0, np.abs(objective).max()):
                raise ValueError("objective weight must be positive semidefinite")

        return values

    @property
    def target_set(self) -> TargetSet:
        return TargetSet(self.targets)

    @property
    def n_inputs(self) -> int:
        """Nm, the stacked input length
        """

        return self.horizon * self.system.m

    def objective_weight(self) -> np.ndarray:
        if self.objective is None:
            return np.eye(self.n_inputs)
        return np.asarray(self.objective)

    def stacked_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Input box repeated over the horizon
        """

        return np.tile(self.input_box.lo, self.horizon), np.tile(self.input_box.hi, self.horizon)

    def stacked_polytope(self) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Block-diagonal input polytope rows over the horizon
        """

        if self.input_polytope is None:
            return None
        a = np.kron(np.eye(self.horizon), self.input_polytope.A)
        b = np.tile(self.input_polytope.b, self.horizon)
        return a, b


def save_problem(spec: ProblemSpec, path: Path):
    write_document(spec, path)


def load_problem(path: Path) -> ProblemSpec:
    return read_document(ProblemSpec, path)


def line_of_sight_cone(depth: float = 10.0) -> TargetPolytope:
    """Cone x >= 2|y|, x >= 2|z|, x <= depth (positions only), step set by the caller
    """

    g = np.zeros((5, 6))
    g[:, :3] = [
        [-1.0, 0.0, 2.0],
        [-1.0, 2.0, 0.0],
        [-1.0, 0.0, -2.0],
        [-1.0, -2.0, 0.0],
        [1.0, 0.0, 0.0],
    ]
    h = np.array([0.0, 0.0, 0.0, 0.0, depth])

    return TargetPolytope(step=0, G=g, h=h)


def docking_box() -> TargetPolytope:
    """Terminal box 0 <= x <= 2, |y|, |z| <= 1, |velocity| <= 0.1
    """

    g = np.kron(np.eye(6), np.array([[1.0], [-1.0]]))
    h = np.concatenate([[2.0, 0.0], np.ones(4), 0.1 * np.ones(6)])

    return TargetPolytope(step=0, G=g, h=h)


def make_cwh_problem(params: CwhParameters,
                     alpha: float = 0.05,
                     horizon: int = 5,
                     x0: Optional[np.ndarray] = None,
                     input_limit: float = 1.0) -> ProblemSpec:
    """Satellite rendezvous demo

    The deputy stays in the line-of-sight cone for steps 1..N-1 and reaches the
    docking box at step N. Thrust is bounded by ``input_limit`` per axis.
    """

    if x0 is None:
        x0 = np.array([1.65, 0.4, 0.2, 0.0, 0.0, 0.0])

    cone = line_of_sight_cone()
    terminal = docking_box()

    targets = [TargetPolytope(step=k, G=cone.G, h=cone.h) for k in range(1, horizon)]
    targets.append(TargetPolytope(step=horizon, G=terminal.G, h=terminal.h))

    return ProblemSpec(
        system=build_cwh(params),
        horizon=horizon,
        x0=x0,
        input_box=InputBox(lo=-input_limit * np.ones(3), hi=input_limit * np.ones(3)),
        targets=targets,
        alpha=alpha,
    )


def cwh_disturbance_model(horizon: int,
                          position_variance: float = 1e-6,
                          velocity_variance: float = 5e-8,
                          seed: int = 0) -> GaussianModel:
    """Zero-mean disturbance with I_N (x) diag(position, velocity) covariance
    """

    per_step = np.diag([position_variance] * 3 + [velocity_variance] * 3)

    return GaussianModel(
        mean=np.zeros(6 * horizon),
        covariance=np.kron(np.eye(horizon), per_step),
        seed=seed,
    )
