# tensor_core/ops.py
"""Multilinear-algebra primitives.

Unfoldings follow the Kolda-Bader convention: rows are indexed by the chosen
mode and the lowest-numbered remaining mode varies fastest along the columns.
Modes are 1-based throughout.
"""
from functools import reduce
from typing import Sequence, Union

import numpy as np

from exceptions import DataError
from tensor_core.tensor import DenseTensor, Matrix, as_dense, as_shape, check_mode, tensor_size


def unfold(tensor, mode: int) -> Matrix:
    tensor = as_dense(tensor)
    axis = check_mode(mode, tensor.ndim)
    moved = np.moveaxis(tensor, axis, 0)
    return np.reshape(moved, (tensor.shape[axis], -1), order="F")


def fold(matrix, mode: int, shape: Sequence[int]) -> DenseTensor:
    matrix = as_dense(matrix)
    shape = as_shape(shape)
    axis = check_mode(mode, len(shape))
    rest = shape[:axis] + shape[axis + 1:]
    if matrix.ndim != 2 or matrix.shape != (shape[axis], tensor_size(rest)):
        raise DataError(f"Matrix of shape {matrix.shape} cannot fold into {shape} at mode {mode}.")
    moved = np.reshape(matrix, (shape[axis],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(moved, 0, axis))


def mode_n_product(tensor, matrix, mode: int) -> DenseTensor:
    """``tensor x_mode matrix``: contracts the mode with the matrix columns."""
    tensor = as_dense(tensor)
    matrix = as_dense(matrix)
    axis = check_mode(mode, tensor.ndim)
    if matrix.ndim != 2 or matrix.shape[1] != tensor.shape[axis]:
        raise DataError(
            f"Matrix of shape {matrix.shape} cannot multiply mode {mode} of extent {tensor.shape[axis]}."
        )
    product = np.tensordot(matrix, tensor, axes=(1, axis))
    return np.ascontiguousarray(np.moveaxis(product, 0, axis))


def multi_mode_product(tensor, matrices: Sequence, transpose: bool = False) -> DenseTensor:
    """Apply one matrix per mode in order; ``None`` entries skip a mode."""
    result = as_dense(tensor)
    for axis, matrix in enumerate(matrices):
        if matrix is None:
            continue
        result = mode_n_product(result, matrix.T if transpose else matrix, axis + 1)
    return result


def outer_product(vectors: Sequence) -> DenseTensor:
    if len(vectors) == 0:
        raise DataError("outer_product needs at least one vector.")
    vectors = [as_dense(v).ravel() for v in vectors]
    if any(v.size == 0 for v in vectors):
        raise DataError("outer_product vectors must be nonempty.")
    return reduce(np.multiply.outer, vectors)


def khatri_rao(a, b) -> Matrix:
    """Column-wise Kronecker product; row ``i * b.rows + j`` holds ``a[i] * b[j]``."""
    a = as_dense(a)
    b = as_dense(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError(f"Khatri-Rao needs equal column counts, got {a.shape} and {b.shape}.")
    return np.reshape(a[:, None, :] * b[None, :, :], (-1, a.shape[1]))


def khatri_rao_chain(matrices: Sequence) -> Matrix:
    return reduce(khatri_rao, matrices)


def unfolding_khatri_rao(factors: Sequence, mode: int) -> Matrix:
    """Khatri-Rao of every factor but ``mode``, ordered to match ``unfold(t, mode)`` columns."""
    others = [f for n, f in enumerate(factors, start=1) if n != mode]
    return khatri_rao_chain(others[::-1])


def _check_same_shape(t1: DenseTensor, t2: DenseTensor) -> None:
    if t1.shape != t2.shape:
        raise DataError(f"Shape mismatch: {t1.shape} vs {t2.shape}.")


def frobenius_norm(tensor) -> float:
    return float(np.linalg.norm(as_dense(tensor).ravel()))


def inner_product(t1, t2) -> float:
    t1, t2 = as_dense(t1), as_dense(t2)
    _check_same_shape(t1, t2)
    return float(np.dot(t1.ravel(), t2.ravel()))


def hadamard(t1, t2) -> DenseTensor:
    t1, t2 = as_dense(t1), as_dense(t2)
    _check_same_shape(t1, t2)
    return t1 * t2


def vector_norm(vector, p: Union[int, float, str] = 2) -> float:
    """p-norm for p in {1, 2, inf}; the empty vector has norm 0."""
    if isinstance(p, str):
        p = float(p)
    if p not in (1, 2, np.inf):
        raise DataError(f"Unsupported norm order {p!r}; use 1, 2 or inf.")
    v = np.asarray(vector, dtype=np.float64).ravel()
    if v.size == 0:
        return 0.0
    if p == 1:
        return float(np.sum(np.abs(v)))
    if p == 2:
        return float(np.sqrt(np.dot(v, v)))
    return float(np.max(np.abs(v)))
