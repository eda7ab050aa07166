# -*- coding: utf-8 -*-

"""Disturbance sample sets, their statistics and a seeded Gaussian generator

Sample statistics use the biased estimator (divisor N_s, no Bessel correction); the
concentration bound in ``ccstat.concentration`` is stated for exactly this statistic.

Random draws come from blocked substreams: row ``i`` of stream ``s`` under seed ``seed``
is drawn from the generator seeded with ``SeedSequence(seed, spawn_key=(s, i // 1024))``,
so a row never depends on how a run is split into batches or threads.
"""

from typing import Iterator
from pathlib import Path
import logging

import numpy as np
from pydantic import validator
import scipy.linalg

from .constants import SUBSTREAM_BLOCK
from .dynamics import ConcatenatedDynamics, propagate_mean
from .errors import (
    ArtifactError,
    DegenerateSamplesError,
    DomainError,
    InsufficientSamplesError,
    ModelError,
    NumericalError,
    StructuralError,
)
from .models import ArrayModel, DocumentModel, as_array


logger = logging.getLogger(__name__)

# All pairwise max-norm differences below this mean the samples are all equal
DEGENERATE_TOL = 1e-14

# Relative tolerance for negative eigenvalues / radicands produced by rounding
PSD_TOL = 1e-10
RADICAND_TOL = 1e-12

# Substream ids
STREAM_SAMPLES = 0
STREAM_CERTIFY = 1
STREAM_OUT_OF_SAMPLE = 2
STREAM_IN_SAMPLE = 3


class SampleSet(ArrayModel):
    """N_s concatenated disturbance samples, one per row
    """

    samples: np.ndarray

    @validator('samples', pre=True)
    def _check_samples(cls, value):
        arr = as_array(value, ndim=2, name='samples')
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise StructuralError(f"a sample set needs at least one non-empty sample, got shape {arr.shape}")
        return arr

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def is_degenerate(self) -> bool:
        """True when every sample equals every other one (to ``DEGENERATE_TOL``)
        """

        return float(np.ptp(self.samples, axis=0).max()) < DEGENERATE_TOL


class SampleStatistics(ArrayModel):
    """Sample mean and biased sample covariance of ``count`` samples
    """

    count: int
    mean: np.ndarray
    covariance: np.ndarray

    @validator('mean', pre=True)
    def _check_mean(cls, value):
        return as_array(value, ndim=1, name='mean')

    @validator('covariance', pre=True)
    def _check_covariance(cls, value, values):
        arr = as_array(value, ndim=2, name='covariance')
        dim = values['mean'].size if 'mean' in values else arr.shape[0]
        if arr.shape != (dim, dim):
            raise StructuralError(f"'covariance' must have shape {(dim, dim)}, got {arr.shape}")
        return arr

    @validator('count')
    def _check_count(cls, value):
        if value < 1:
            raise DomainError(f"statistics need at least one sample, got {value}")
        return value

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def initial(cls, sample: np.ndarray) -> 'SampleStatistics':
        """Statistics of a single sample: the sample itself and a zero covariance
        """

        sample = np.asarray(sample, dtype=float).reshape(-1)
        return cls(count=1, mean=sample, covariance=np.zeros((sample.size, sample.size)))


class GaussianModel(DocumentModel):
    """Multivariate normal disturbance model N(mean, covariance) with a seed
    """

    mean: np.ndarray
    covariance: np.ndarray
    seed: int = 0

    @validator('mean', pre=True)
    def _check_mean(cls, value):
        return as_array(value, ndim=1, name='mean')

    @validator('covariance', pre=True)
    def _check_covariance(cls, value, values):
        arr = as_array(value, ndim=2, name='covariance')
        if 'mean' in values and arr.shape != (values['mean'].size,) * 2:
            raise StructuralError(f"'covariance' must have shape {(values['mean'].size,) * 2}, got {arr.shape}")
        if not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
            raise ModelError("'covariance' is not symmetric")
        return arr

    @validator('seed')
    def _check_seed(cls, value):
        if not 0 <= value < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {value}")
        return value

    @property
    def dim(self) -> int:
        return self.mean.size

    def factor(self) -> np.ndarray:
        """Return L with L L^T = covariance

        Cholesky for positive definite covariances, a clipped eigendecomposition for
        positive semidefinite ones.

        Raises
        ------
        ModelError : The covariance has an eigenvalue below -PSD_TOL times the largest one.

        """

        try:
            return scipy.linalg.cholesky(self.covariance, lower=True)
        except scipy.linalg.LinAlgError:
            pass

        eigvals, eigvecs = scipy.linalg.eigh(self.covariance)
        scale = max(float(np.abs(eigvals).max()), 0.0)
        if eigvals.min() < -PSD_TOL * scale:
            raise ModelError(f"covariance is not positive semidefinite (smallest eigenvalue {eigvals.min():g})")

        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def _block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def standard_normal_rows(seed: int, stream: int, start: int, count: int, dim: int) -> np.ndarray:
    """Rows ``start .. start + count - 1`` of a standard normal substream

    Parameters
    ----------
    seed : int
        Root seed.
    stream : int
        Substream id; distinct purposes use distinct streams.
    start : int
        Index of the first row.
    count : int
        Number of rows.
    dim : int
        Row length.

    Returns
    -------
    rows : array, shape (count, dim)

    """

    rows = np.empty((count, dim))
    if count == 0:
        return rows

    first, last = start // SUBSTREAM_BLOCK, (start + count - 1) // SUBSTREAM_BLOCK

    for block in range(first, last + 1):
        block_rows = _block_generator(seed, stream, block).standard_normal((SUBSTREAM_BLOCK, dim))
        lo = max(start, block * SUBSTREAM_BLOCK)
        hi = min(start + count, (block + 1) * SUBSTREAM_BLOCK)
        rows[lo - start:hi - start] = block_rows[lo - block * SUBSTREAM_BLOCK:hi - block * SUBSTREAM_BLOCK]

    return rows


def block_ranges(count: int) -> Iterator[tuple[int, int]]:
    """Yield (start, stop) ranges aligned with substream blocks
    """

    for start in range(0, count, SUBSTREAM_BLOCK):
        yield start, min(start + SUBSTREAM_BLOCK, count)


def gaussian_rows(model: GaussianModel, seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Rows of N(mean, covariance) drawn from a substream
    """

    z = standard_normal_rows(seed, stream, start, count, model.dim)
    return model.mean + z @ model.factor().T


def generate_samples(model: GaussianModel, count: int) -> SampleSet:
    """Draw ``count`` i.i.d. samples from the model, reproducible from ``model.seed``
    """

    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")

    samples = gaussian_rows(model, model.seed, STREAM_SAMPLES, 0, count)
    logger.debug("Generated %d samples of dimension %d (seed %d)", count, model.dim, model.seed)

    return SampleSet(samples=samples)


def compute_statistics(sample_set: SampleSet) -> SampleStatistics:
    """Sample mean and biased sample covariance (divisor N_s)

    The mean is ``samples.sum(axis=0) / N_s`` and the covariance is
    ``centered.T @ centered / N_s`` symmetrized, so recomputation from the same
    samples reproduces both exactly.

    Raises
    ------
    InsufficientSamplesError : Fewer than two samples.
    DegenerateSamplesError : All samples are equal.

    """

    count = sample_set.count
    if count < 2:
        raise InsufficientSamplesError('sample statistics', required=2, actual=count)
    if sample_set.is_degenerate():
        raise DegenerateSamplesError("all disturbance samples are equal; the sample covariance is zero")

    samples = sample_set.samples
    mean = samples.sum(axis=0) / count
    centered = samples - mean
    covariance = centered.T @ centered / count
    covariance = 0.5 * (covariance + covariance.T)

    return SampleStatistics(count=count, mean=mean, covariance=covariance)


def incremental_update(stats: SampleStatistics, sample: np.ndarray) -> SampleStatistics:
    """Fold one more sample into the statistics

    With N* = N_s + 1 and d = x - mean::

        mean* = mean + d / N*
        cov*  = (N_s / N*) cov + (N_s / N*^2) d d^T

    which gives x - mean* = (N_s / N*) d.
    """

    sample = np.asarray(sample, dtype=float).reshape(-1)
    if sample.size != stats.dim:
        raise StructuralError(f"sample must have length {stats.dim}, got {sample.size}")

    count = stats.count
    count_star = count + 1
    delta = sample - stats.mean

    return SampleStatistics(
        count=count_star,
        mean=stats.mean + delta / count_star,
        covariance=(count / count_star) * stats.covariance + (count / count_star ** 2) * np.outer(delta, delta),
    )


def clamp_radicand(value: float, scale: float) -> float:
    """Clamp a slightly negative variance to zero

    Raises
    ------
    NumericalError : The value is below ``-RADICAND_TOL * max(1, scale)``.

    """

    if value < 0.0:
        if value < -RADICAND_TOL * max(1.0, scale):
            raise NumericalError(f"negative variance {value:g}")
        return 0.0
    return value


def scalar_projection_stats(stats: SampleStatistics,
                            dynamics: ConcatenatedDynamics,
                            x0: np.ndarray,
                            inputs: np.ndarray,
                            normal: np.ndarray,
                            k: int) -> tuple[float, float]:
    """Sample mean and sample std of G x(k)

    The mean is G (A^k x0 + C(k) U + D(k) mean) and the std is
    sqrt(G D(k) cov D(k)^T G^T), which does not depend on U.
    """

    normal = np.asarray(normal, dtype=float).reshape(-1)
    if normal.size != dynamics.n:
        raise StructuralError(f"half-space normal must have length {dynamics.n}, got {normal.size}")
    if stats.dim != dynamics.horizon * dynamics.n:
        raise StructuralError(f"statistics dimension {stats.dim} does not match Nn = {dynamics.horizon * dynamics.n}")

    mean = float(normal @ propagate_mean(dynamics, x0, inputs, stats.mean, k))

    row = normal @ dynamics.disturbance_map(k)
    variance = float(row @ stats.covariance @ row)
    scale = float(np.abs(row) @ np.abs(stats.covariance) @ np.abs(row))

    return mean, float(np.sqrt(clamp_radicand(variance, scale)))


def save_samples(sample_set: SampleSet, path: Path):
    """Write a sample set as binary (``.bin``) or CSV (``.csv``)

    Binary layout: little-endian uint64 N_s, uint64 Nn, then N_s * Nn little-endian
    float64 values in row-major order. CSV: a ``N_s,Nn`` header line, then one sample per line.
    """

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == '.csv':
            with path.open('w') as fh:
                fh.write(f'{sample_set.count},{sample_set.dim}\n')
                np.savetxt(fh, sample_set.samples, delimiter=',', fmt='%.17g')
        else:
            with path.open('wb') as fh:
                fh.write(np.array([sample_set.count, sample_set.dim], dtype='<u8').tobytes())
                fh.write(np.ascontiguousarray(sample_set.samples, dtype='<f8').tobytes())
    except OSError as err:
        raise ArtifactError(f"Cannot write samples to '{path}': {err}") from err


def load_samples(path: Path) -> SampleSet:
    """Read a sample set written by ``save_samples``
    """

    try:
        if path.suffix == '.csv':
            with path.open() as fh:
                count, dim = (int(v) for v in fh.readline().strip().split(','))
                samples = np.loadtxt(fh, delimiter=',', ndmin=2)
        else:
            raw = path.read_bytes()
            count, dim = (int(v) for v in np.frombuffer(raw[:16], dtype='<u8'))
            samples = np.frombuffer(raw[16:], dtype='<f8').astype(float)
    except (OSError, ValueError) as err:
        raise ArtifactError(f"Cannot read samples from '{path}': {err}") from err

    if samples.size != count * dim:
        raise ArtifactError(f"'{path}' declares {count}x{dim} samples but holds {samples.size} values")

    return SampleSet(samples=samples.reshape(count, dim))
