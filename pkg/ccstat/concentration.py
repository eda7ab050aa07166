# -*- coding: utf-8 -*-

"""Sample-based one-sided Vysochanskij-Petunin bound

For N_s samples with sample mean m and biased sample std s, and a unimodal
standardized statistic, a fresh draw x satisfies::

    P(x - m >= lambda * s) <= f(lambda) = 4 (sqrt(N*) + lambda)^2 / (9 (lambda^2 N_s + (sqrt(N*) + lambda)^2))

with N* = N_s + 1, for every lambda > lambda_min = sqrt(5 N*) / (sqrt(3 N_s) - sqrt(5)).
As N_s grows, f tends to the one-sided Vysochanskij-Petunin bound 4 / (9 (lambda^2 + 1)).
"""

from typing import Union
from abc import ABC, abstractmethod
from fractions import Fraction
import math

import numpy as np
from pydantic import validator
import scipy.optimize

from .errors import DomainError, InfeasibleTargetError, InsufficientSamplesError, LambdaBoundaryError, NumericalError
from .models import ArrayModel


# The standardized statistic is unimodal (log-concave) for N_s >= 4
MIN_UNIMODAL_SAMPLES = 4

OSVPI_FLOOR = math.sqrt(5.0 / 3.0)

INVERSE_TOL = 1e-12

TLambda = Union[float, np.ndarray]


class BoundContext(ArrayModel):
    """Sample count of the bound
    """

    n_samples: int

    @validator('n_samples', pre=True)
    def _check_n_samples(cls, value):
        if int(value) != value:
            raise DomainError(f"sample count must be an integer, got {value}")
        if value < MIN_UNIMODAL_SAMPLES:
            raise InsufficientSamplesError('unimodality gate (N_s >= 4)', MIN_UNIMODAL_SAMPLES, int(value))
        return int(value)

    @property
    def n_star(self) -> int:
        return self.n_samples + 1


class RiskBound(ArrayModel):
    """A point (lambda, f(lambda)) on the valid branch of the bound
    """

    lambda_: float
    probability: float

    @classmethod
    def at(cls, ctx: BoundContext, lam: float) -> 'RiskBound':
        floor = lambda_min(ctx)
        if lam <= floor:
            raise DomainError(f"lambda = {lam} is not above lambda_min = {floor}")
        return cls(lambda_=lam, probability=f(ctx, lam))


def _as_lambda(lam: TLambda) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"lambda must be finite and positive, got {lam}")
    return arr


def _scalar_or_array(arr: np.ndarray) -> TLambda:
    return float(arr) if arr.ndim == 0 else arr


def f(ctx: BoundContext, lam: TLambda) -> TLambda:
    """The bound f(lambda); accepts scalars and arrays
    """

    lam = _as_lambda(lam)
    p2 = (math.sqrt(ctx.n_star) + lam) ** 2
    return _scalar_or_array(4.0 * p2 / (9.0 * (ctx.n_samples * lam ** 2 + p2)))


def f_prime(ctx: BoundContext, lam: TLambda) -> TLambda:
    """df/dlambda = -8 N_s sqrt(N*) lambda (sqrt(N*) + lambda) / (9 D^2), D = N_s lambda^2 + (sqrt(N*) + lambda)^2
    """

    lam = _as_lambda(lam)
    s = math.sqrt(ctx.n_star)
    d = ctx.n_samples * lam ** 2 + (s + lam) ** 2
    return _scalar_or_array(-8.0 * ctx.n_samples * s * lam * (s + lam) / (9.0 * d ** 2))


def f_second(ctx: BoundContext, lam: TLambda) -> TLambda:
    """d2f/dlambda2 = 8 N_s (2 lambda^3 N*^(3/2) + 3 lambda^2 N*^2 - N*^2) / (9 D^3)

    Positive exactly when lambda is above the inflection point.
    """

    lam = _as_lambda(lam)
    n_star = ctx.n_star
    s = math.sqrt(n_star)
    d = ctx.n_samples * lam ** 2 + (s + lam) ** 2
    numerator = 2.0 * lam ** 3 * n_star * s + 3.0 * lam ** 2 * n_star ** 2 - n_star ** 2
    return _scalar_or_array(8.0 * ctx.n_samples * numerator / (9.0 * d ** 3))


def lambda_min(ctx: BoundContext) -> float:
    """Validity threshold sqrt(5 N*) / (sqrt(3 N_s) - sqrt(5))
    """

    return math.sqrt(5.0 * ctx.n_star) / (math.sqrt(3.0 * ctx.n_samples) - math.sqrt(5.0))


def asymptote(ctx: BoundContext) -> float:
    """lim f(lambda) = 4 / (9 N*) as lambda grows
    """

    return 4.0 / (9.0 * ctx.n_star)


def inflection_theta(ctx: BoundContext) -> float:
    """Positive root of (2 / sqrt(N*)) lambda^3 + 3 lambda^2 - 1 = 0

    Closed trigonometric form, polished with Newton steps on the cubic.
    """

    n_star = ctx.n_star
    s = math.sqrt(n_star)
    theta = s * (math.cos(math.acos(-(ctx.n_samples - 1) / n_star) / 3.0) - 0.5)

    for _ in range(3):
        residual = 2.0 * theta ** 3 / s + 3.0 * theta ** 2 - 1.0
        slope = 6.0 * theta ** 2 / s + 6.0 * theta
        theta -= residual / slope

    return theta


def f_inverse(ctx: BoundContext, target: float) -> float:
    """Return lambda > lambda_min with f(lambda) = target

    Raises
    ------
    InfeasibleTargetError : target <= 4 / (9 N*); no finite lambda reaches it.
    LambdaBoundaryError : target >= f(lambda_min); only lambda at or below the threshold reach it.

    """

    floor = lambda_min(ctx)
    f_floor = f(ctx, floor)
    limit = asymptote(ctx)

    if target <= limit:
        raise InfeasibleTargetError(
            f"target {target:g} is not above the bound asymptote 4/(9(N_s+1)) = {limit:g} for N_s = {ctx.n_samples}")
    if target >= f_floor:
        raise LambdaBoundaryError(
            f"target {target:g} is not below f(lambda_min) = {f_floor:g} for N_s = {ctx.n_samples}")

    hi = 2.0 * floor
    while f(ctx, hi) > target:
        hi *= 2.0

    lam = scipy.optimize.bisect(lambda x: f(ctx, x) - target, floor, hi,
                                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=2000)

    if abs(f(ctx, lam) - target) > INVERSE_TOL:
        raise NumericalError(f"bisection did not reach f(lambda) = {target:g} (got {f(ctx, lam):g})")

    return lam


def min_samples(total_halfspaces: int, alpha: Union[float, Fraction]) -> int:
    """Necessary sample count ceil(4 sum N_Tk / (9 alpha) - 1)

    Necessary, not sufficient: the bound only approaches 4/(9 N*) as lambda grows,
    so finite risk allocations need more samples. Computed in exact rational arithmetic.
    """

    if total_halfspaces < 1:
        raise DomainError(f"need at least one half-space, got {total_halfspaces}")

    alpha_q = alpha if isinstance(alpha, Fraction) else Fraction(repr(float(alpha)))
    if not 0 < alpha_q < Fraction(1, 6):
        raise DomainError(f"alpha must lie in (0, 1/6), got {alpha}")

    return math.ceil(Fraction(4 * total_halfspaces) / (9 * alpha_q) - 1)


def osvpi_bound(lam: TLambda) -> TLambda:
    """One-sided Vysochanskij-Petunin bound 4 / (9 (lambda^2 + 1)) for lambda > sqrt(5/3)
    """

    arr = np.asarray(lam, dtype=float)
    if np.any(~(arr > OSVPI_FLOOR)):
        raise DomainError(f"lambda must exceed sqrt(5/3) = {OSVPI_FLOOR:.6f}, got {lam}")
    return _scalar_or_array(4.0 / (9.0 * (arr ** 2 + 1.0)))


class RiskMap(ABC):
    """Map from a constraint's lambda to its charged violation probability

    ``floor`` is the smallest admissible lambda (open bound), ``limit`` the value of the
    map as lambda grows without bound.
    """

    name: str
    floor: float
    limit: float

    @abstractmethod
    def value(self, lam: TLambda) -> TLambda:
        ...

    @abstractmethod
    def derivative(self, lam: TLambda) -> TLambda:
        ...

    @abstractmethod
    def second_derivative(self, lam: TLambda) -> TLambda:
        ...

    @abstractmethod
    def inverse(self, target: float) -> float:
        ...

    @property
    def inflection(self) -> float:
        """Largest lambda where the map stops being convex
        """

        return 0.0

    @property
    def floor_charge(self) -> float:
        """Value of the map at its floor, charged to rows with a fixed lambda
        """

        return float(self.value(self.floor))

    def check_region(self, lam: TLambda):
        """Raise NumericalError unless every lambda lies above the floor and the inflection point
        """

        lam = np.asarray(lam, dtype=float)
        bound = max(self.floor, self.inflection)
        if lam.size and not np.all(lam > bound):
            raise NumericalError(
                f"lambda {float(lam.min()):.6g} left the convex region of the {self.name} risk map (> {bound:.6g})")


class SampleVpRisk(RiskMap):
    """Risk map of the sample-based bound f for a fixed N_s
    """

    name = 'proposed'

    def __init__(self, ctx: BoundContext):
        self.ctx = ctx
        self.floor = lambda_min(ctx)
        self.limit = asymptote(ctx)

    def __repr__(self):
        return f'SampleVpRisk(n_samples={self.ctx.n_samples})'

    def value(self, lam):
        return f(self.ctx, lam)

    def derivative(self, lam):
        return f_prime(self.ctx, lam)

    def second_derivative(self, lam):
        return f_second(self.ctx, lam)

    def inverse(self, target):
        return f_inverse(self.ctx, target)

    @property
    def inflection(self) -> float:
        return inflection_theta(self.ctx)


class OsvpiRisk(RiskMap):
    """Risk map of the one-sided Vysochanskij-Petunin bound (known moments)
    """

    name = 'osvpi'
    floor = OSVPI_FLOOR
    limit = 0.0

    def __repr__(self):
        return 'OsvpiRisk()'

    def value(self, lam):
        return osvpi_bound(lam)

    def derivative(self, lam):
        lam = np.asarray(lam, dtype=float)
        return _scalar_or_array(-8.0 * lam / (9.0 * (lam ** 2 + 1.0) ** 2))

    def second_derivative(self, lam):
        lam = np.asarray(lam, dtype=float)
        return _scalar_or_array(8.0 * (3.0 * lam ** 2 - 1.0) / (9.0 * (lam ** 2 + 1.0) ** 3))

    def inverse(self, target):
        if target <= 0.0:
            raise InfeasibleTargetError(f"target {target:g} must be positive")
        if target >= 1.0 / 6.0:
            raise LambdaBoundaryError(f"target {target:g} is not below 1/6 = bound at sqrt(5/3)")
        return math.sqrt(4.0 / (9.0 * target) - 1.0)

    @property
    def inflection(self) -> float:
        return 1.0 / math.sqrt(3.0)

    @property
    def floor_charge(self) -> float:
        # 4 / (9 (5/3 + 1)); osvpi_bound rejects lambda at the open floor itself
        return 1.0 / 6.0
