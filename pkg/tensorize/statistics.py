# tensorize/statistics.py
"""Statistical tensorization: central moments, cumulant tensors, lagged and
higher-order covariances. All estimates are population (divide-by-count)."""
from typing import Sequence

import numpy as np

from exceptions import DataError
from tensor_core.tensor import DenseTensor, Matrix, as_dense


def central_moments(sample, order: int) -> float:
    x = as_dense(sample).ravel()
    if x.size == 0:
        raise DataError("Central moments need a nonempty sample.")
    if order < 1:
        raise DataError("Moment order must be >= 1.")
    if order == 1:
        return 0.0
    return float(np.mean((x - x.mean()) ** order))


def _symmetrize(full: DenseTensor) -> DenseTensor:
    """Copy each sorted-index entry to all its permutations, so symmetry is exact."""
    order = full.ndim
    index = np.indices(full.shape).reshape(order, -1)
    canonical = np.sort(index, axis=0)
    return full[tuple(canonical)].reshape(full.shape)


def _centered_observations(x, minimum: int = 2) -> Matrix:
    x = as_dense(x)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DataError(f"Expected an observations-by-variables matrix, got shape {x.shape}.")
    if x.shape[0] < minimum:
        raise DataError(f"Need at least {minimum} observations, got {x.shape[0]}.")
    return x - x.mean(axis=0)


def cumulant_tensor(x, order: int) -> DenseTensor:
    """Zero-mean multivariate cumulant of order 2, 3 or 4, fully symmetric."""
    if order not in (2, 3, 4):
        raise DataError(f"Cumulant order must be 2, 3 or 4, got {order}.")
    z = _centered_observations(x)
    n = z.shape[0]
    covariance = z.T @ z / n
    if order == 2:
        return _symmetrize(covariance)
    if order == 3:
        return _symmetrize(np.einsum("ti,tj,tk->ijk", z, z, z, optimize=True) / n)
    moment = np.einsum("ti,tj,tk,tl->ijkl", z, z, z, z, optimize=True) / n
    c = covariance
    cumulant = (
        moment
        - np.einsum("ij,kl->ijkl", c, c)
        - np.einsum("ik,jl->ijkl", c, c)
        - np.einsum("il,jk->ijkl", c, c)
    )
    return _symmetrize(cumulant)


def cross_cumulant4(a, b, c, d) -> float:
    """Fourth-order cross-cumulant of four equally long signals."""
    signals = [as_dense(s).ravel() for s in (a, b, c, d)]
    if len({s.size for s in signals}) != 1:
        raise DataError("cross_cumulant4 needs signals of equal length.")
    z = _centered_observations(np.column_stack(signals))
    n = z.shape[0]
    za, zb, zc, zd = z.T

    def e(u, v):
        return float(np.dot(u, v)) / n

    return float(np.mean(za * zb * zc * zd)) - e(za, zb) * e(zc, zd) - e(za, zc) * e(zb, zd) - e(za, zd) * e(zb, zc)


def lagged_covariance(x, lags: Sequence[int]) -> DenseTensor:
    """Shifted covariances of a ``d x T`` signal stacked along a third mode."""
    x = as_dense(x)
    if x.ndim == 1:
        x = x[None, :]
    t = x.shape[1]
    lags = [int(lag) for lag in lags]
    if not lags:
        raise DataError("At least one lag is required.")
    for lag in lags:
        if lag < 0 or lag >= t:
            raise DataError(f"Lag {lag} is outside 0..{t - 1}.")
    z = x - x.mean(axis=1, keepdims=True)
    slices = [z[:, : t - lag] @ z[:, lag:].T / (t - lag) for lag in lags]
    return np.stack(slices, axis=2)


def higher_order_covariance(observations: Sequence) -> DenseTensor:
    """Covariance of flattened observations reshaped to ``shape + shape``."""
    observations = [as_dense(o) for o in observations]
    if len(observations) < 2:
        raise DataError("Need at least 2 observations.")
    shape = observations[0].shape
    for k, o in enumerate(observations):
        if o.shape != shape:
            raise DataError(f"Observation {k} has shape {o.shape}, expected {shape}.")
    flat = np.stack([o.ravel() for o in observations])
    centered = flat - flat.mean(axis=0)
    covariance = centered.T @ centered / len(observations)
    return covariance.reshape(shape + shape)

