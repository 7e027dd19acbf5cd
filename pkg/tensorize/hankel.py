# tensorize/hankel.py
"""Deterministic reshaping tensorizations: segmentation and Hankelization.

Hankel convention: ``H[i, j] = v[i + j]`` (0-based), so a length-T signal with
window L gives an ``L x (T - L + 1)`` matrix with constant anti-diagonals.
"""
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from exceptions import DataError
from tensor_core.tensor import DenseTensor, Matrix, as_dense, as_shape, tensor_size


def segment(vector, shape: Sequence[int]) -> DenseTensor:
    v = as_dense(vector).ravel()
    shape = as_shape(shape)
    if tensor_size(shape) != v.size:
        raise DataError(f"Cannot segment {v.size} samples into shape {shape}.")
    return v.reshape(shape).copy()


def desegment(tensor) -> np.ndarray:
    return as_dense(tensor).ravel().copy()


def hankelize(vector, window: int) -> Matrix:
    v = as_dense(vector).ravel()
    if not 1 <= window <= v.size:
        raise DataError(f"Window {window} is outside 1..{v.size}.")
    return sla.hankel(v[:window], v[window - 1:])


def hankelize_channels(x, window: int) -> DenseTensor:
    """``C x T`` channels to an ``L x (T - L + 1) x C`` tensor, one Hankel slice per channel."""
    x = as_dense(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DataError(f"Expected a channels-by-samples matrix, got shape {x.shape}.")
    return np.stack([hankelize(row, window) for row in x], axis=2)


def dehankelize(h) -> np.ndarray:
    """Average each anti-diagonal; constant anti-diagonals come back bit-exact."""
    h = as_dense(h)
    if h.ndim != 2 or h.size == 0:
        raise DataError(f"Expected a nonempty matrix, got shape {h.shape}.")
    rows, cols = np.indices(h.shape)
    diagonal = (rows + cols).ravel()
    values = h.ravel()
    length = h.shape[0] + h.shape[1] - 1
    means = np.bincount(diagonal, weights=values, minlength=length) / np.bincount(diagonal, minlength=length)
    low = np.full(length, np.inf)
    high = np.full(length, -np.inf)
    np.minimum.at(low, diagonal, values)
    np.maximum.at(high, diagonal, values)
    return np.where(low == high, low, means)
