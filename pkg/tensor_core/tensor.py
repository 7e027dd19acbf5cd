# tensor_core/tensor.py
"""Dense and sparse N-way tensor types.

Dense tensors and matrices are plain float64 ``numpy`` arrays in C order, so the
last index varies fastest; :func:`as_dense` is the single entry point that
enforces that layout. Sparse tensors keep a read-only coordinate map.
"""
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from exceptions import DataError, MemoryBudgetError
from settings import BYTES_PER_SCALAR, get_memory_budget

DenseTensor = npt.NDArray[np.float64]
Matrix = npt.NDArray[np.float64]
Shape = Tuple[int, ...]
Index = Tuple[int, ...]


def as_shape(dims: Iterable[int]) -> Shape:
    shape = tuple(int(d) for d in dims)
    if not shape:
        raise DataError("A shape needs at least one mode.")
    if any(d < 1 for d in shape):
        raise DataError(f"All extents must be >= 1, got {shape}.")
    return shape


def tensor_size(shape: Sequence[int]) -> int:
    """Number of cells as an arbitrary-precision int (no overflow for huge shapes)."""
    return math.prod(int(d) for d in shape)


def as_dense(data, copy: bool = False) -> DenseTensor:
    array = np.array(data, dtype=np.float64, order="C") if copy else np.ascontiguousarray(data, dtype=np.float64)
    if array.ndim == 0:
        raise DataError("A tensor needs at least one mode.")
    return array


def linear_offset(index: Sequence[int], shape: Sequence[int]) -> int:
    """Multi-index to row-major offset."""
    return int(np.ravel_multi_index(tuple(index), tuple(shape)))


def multi_index(offset: int, shape: Sequence[int]) -> Index:
    return tuple(int(i) for i in np.unravel_index(offset, tuple(shape)))


def check_mode(mode: int, ndim: int) -> int:
    """Validate a 1-based mode and return the 0-based axis."""
    if not 1 <= mode <= ndim:
        raise DataError(f"Mode {mode} is out of range for a {ndim}-way tensor.")
    return mode - 1


@dataclass(frozen=True)
class SparseTensor:
    """Shape plus a coordinate map ``index tuple -> nonzero value``."""

    shape: Shape
    entries: Mapping[Index, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "shape", as_shape(self.shape))
        if not isinstance(self.entries, MappingProxyType):
            object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    @classmethod
    def from_entries(cls, shape: Iterable[int], items: Iterable[Tuple[Sequence[int], float]]) -> "SparseTensor":
        """Build from ``(index, value)`` pairs: later duplicates overwrite, zeros remove."""
        shape = as_shape(shape)
        entries = {}
        for index, value in items:
            key = tuple(int(i) for i in index)
            if len(key) != len(shape):
                raise DataError(f"Index {key} has {len(key)} modes, shape has {len(shape)}.")
            if any(i < 0 or i >= d for i, d in zip(key, shape)):
                raise DataError(f"Index {key} is outside shape {shape}.")
            value = float(value)
            if value == 0.0:
                entries.pop(key, None)
            else:
                entries[key] = value
        return cls(shape, entries)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    @property
    def size(self) -> int:
        return tensor_size(self.shape)

    @property
    def density(self) -> float:
        return self.nnz / self.size

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Entries as a sorted ``(nnz, N)`` index array and a value vector."""
        if not self.entries:
            return np.zeros((0, self.ndim), dtype=np.int64), np.zeros(0)
        keys = sorted(self.entries)
        return np.array(keys, dtype=np.int64), np.array([self.entries[k] for k in keys])


def check_memory_budget(shape: Sequence[int], budget: Optional[int] = None) -> None:
    budget = get_memory_budget() if budget is None else budget
    needed = tensor_size(shape) * BYTES_PER_SCALAR
    if needed > budget:
        raise MemoryBudgetError(
            f"Densifying shape {tuple(shape)} needs {needed:,} bytes, over the {budget:,} byte budget."
        )


def sparse_to_dense(tensor: SparseTensor, budget: Optional[int] = None) -> DenseTensor:
    check_memory_budget(tensor.shape, budget)
    dense = np.zeros(tensor.shape)
    if tensor.nnz:
        index, values = tensor.coordinates()
        dense[tuple(index.T)] = values
    return dense


def dense_to_sparse(tensor, tol: float = 0.0) -> SparseTensor:
    """Keep entries with ``|x| > tol``."""
    if tol < 0:
        raise DataError("tol must be >= 0.")
    tensor = as_dense(tensor)
    kept = np.argwhere(np.abs(tensor) > tol)
    return SparseTensor(tensor.shape, {tuple(int(i) for i in idx): float(tensor[tuple(idx)]) for idx in kept})
