# tensorize/table.py
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from exceptions import DataError
from settings import BYTES_PER_SCALAR, get_memory_budget
from tensor_core.tensor import SparseTensor, check_mode

logger = logging.getLogger(__name__)

Aggregation = Literal["mean", "sum", "last", "count"]


# --- Pydantic Schemas ---
class ColumnSpec(BaseModel):
    name: str
    role: Literal["coordinate", "value", "ignored"]
    mapping: Literal["identity", "sequential", "bin"] = "sequential"
    bin_width: Optional[float] = Field(default=None, gt=0)
    bin_origin: float = 0.0
    aggregation: Aggregation = "mean"

    @model_validator(mode="after")
    def _bin_needs_width(self):
        if self.role == "coordinate" and self.mapping == "bin" and self.bin_width is None:
            raise ValueError(f"Column {self.name!r} uses bin mapping without bin_width.")
        return self


class DensityReport(BaseModel):
    shape: List[int]
    indexed_cells: int
    pivot_rows: int
    tensor_size: int
    nnz: int
    density: float
    sparsity: float
    dense_bytes: int
    fits_memory_budget: bool
    skipped_rows: int
    collision_count: int
    reference_sparsity: Optional[float] = None
    note: Optional[str] = None


# --- Axis maps ---
@dataclass(frozen=True)
class AxisMap:
    """Ordered original keys of one mode; key ``keys[i]`` sits at index ``i``."""

    name: str
    keys: Tuple

    @property
    def extent(self) -> int:
        return len(self.keys)

    @property
    def forward(self) -> Dict:
        return {key: index for index, key in enumerate(self.keys)}


@dataclass(frozen=True)
class TensorizedTable:
    tensor: SparseTensor
    axis_maps: Tuple[AxisMap, ...]
    collision_count: int
    skipped_rows: int
    pivot_rows: int


def validate_plan(plan: Sequence[ColumnSpec]) -> Tuple[List[ColumnSpec], ColumnSpec]:
    coordinates = [spec for spec in plan if spec.role == "coordinate"]
    values = [spec for spec in plan if spec.role == "value"]
    if len(values) != 1:
        raise DataError(f"A tensorization plan needs exactly one value column, got {len(values)}.")
    if not coordinates:
        raise DataError("A tensorization plan needs at least one coordinate column.")
    return coordinates, values[0]


def _sort_keys(keys: Iterable) -> List:
    keys = list(keys)
    numeric = pd.to_numeric(pd.Series(keys, dtype=object), errors="coerce")
    if len(keys) and not numeric.isna().any():
        return [key for _, key in sorted(zip(numeric.tolist(), keys))]
    return sorted(keys, key=str)


def _first_bad_row(parsed: pd.Series, raw: pd.Series) -> int:
    return int(parsed.index[parsed.isna() & raw.notna()][0])


def _map_coordinate(column: pd.Series, spec: ColumnSpec) -> Tuple[np.ndarray, AxisMap]:
    """Two passes: collect distinct keys, then assign indices."""
    if column.isna().any():
        row = int(column.index[column.isna()][0])
        raise DataError(f"Row {row + 2}: coordinate column {spec.name!r} is empty.")
    if spec.mapping == "sequential":
        keys = _sort_keys(column.unique())
        forward = {key: i for i, key in enumerate(keys)}
        return column.map(forward).to_numpy(dtype=np.int64), AxisMap(spec.name, tuple(keys))

    numbers = pd.to_numeric(column, errors="coerce")
    if numbers.isna().any():
        row = _first_bad_row(numbers, column)
        raise DataError(f"Row {row + 2}: column {spec.name!r} value {column[row]!r} is not numeric.")
    if spec.mapping == "identity":
        if (numbers != np.floor(numbers)).any() or (numbers < 0).any():
            raise DataError(f"Column {spec.name!r} needs non-negative integers for identity mapping.")
        indices = numbers.to_numpy(dtype=np.int64)
        return indices, AxisMap(spec.name, tuple(range(int(indices.max()) + 1)))

    bins = np.floor((numbers.to_numpy() - spec.bin_origin) / spec.bin_width).astype(np.int64)
    distinct = np.unique(bins)
    edges = tuple(float(spec.bin_origin + b * spec.bin_width) for b in distinct)
    return np.searchsorted(distinct, bins), AxisMap(spec.name, edges)


def tensorize_table(rows: Union[pd.DataFrame, Iterable[Mapping[str, str]]], plan: Sequence[ColumnSpec]) -> TensorizedTable:
    """Pivot a table into a sparse tensor: one mode per coordinate column."""
    coordinates, value_spec = validate_plan(plan)
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    if frame.empty:
        raise DataError("Cannot tensorize zero rows.")
    missing = [spec.name for spec in [*coordinates, value_spec] if spec.name not in frame.columns]
    if missing:
        raise DataError(f"Columns not found in table: {missing}.")
    frame = frame.reset_index(drop=True).replace("", np.nan)

    raw_values = frame[value_spec.name]
    skipped = int(raw_values.isna().sum())
    if skipped:
        logger.info(f"Skipping {skipped} rows with an empty {value_spec.name!r} field")
    frame = frame[raw_values.notna()]
    if frame.empty:
        raise DataError("Every row has an empty value field.")

    if value_spec.aggregation == "count":
        values = pd.Series(1.0, index=frame.index)
    else:
        values = pd.to_numeric(frame[value_spec.name], errors="coerce")
        if values.isna().any():
            row = _first_bad_row(values, frame[value_spec.name])
            raise DataError(f"Row {row + 2}: value {frame.loc[row, value_spec.name]!r} is not numeric.")

    codes = {}
    axis_maps = []
    for spec in coordinates:
        codes[spec.name], axis_map = _map_coordinate(frame[spec.name], spec)
        axis_maps.append(axis_map)

    pivot = pd.DataFrame(codes, index=frame.index).assign(_value=values.to_numpy(dtype=np.float64))
    how = "size" if value_spec.aggregation == "count" else value_spec.aggregation
    grouped = pivot.groupby([spec.name for spec in coordinates], sort=True)["_value"].agg(how)
    pivot_rows = len(grouped)

    shape = tuple(axis_map.extent for axis_map in axis_maps)
    index = grouped.index.to_frame(index=False).to_numpy(dtype=np.int64)
    tensor = SparseTensor.from_entries(shape, zip(map(tuple, index), grouped.to_numpy(dtype=np.float64)))
    logger.info(f"Tensorized {len(frame)} rows into shape {shape} with {tensor.nnz} nonzeros")
    return TensorizedTable(
        tensor=tensor,
        axis_maps=tuple(axis_maps),
        collision_count=len(frame) - pivot_rows,
        skipped_rows=skipped,
        pivot_rows=pivot_rows,
    )


def _sparsity_note(sparsity: float, reference: Optional[float]) -> Optional[str]:
    if reference is None or abs(sparsity - reference) < 5e-4:
        return None
    return (
        f"computed sparsity {sparsity:.2%} differs from the reference figure {reference:.2%}; "
        "the computed value is reported"
    )


def storage_report(
    table: TensorizedTable,
    n_rows: int,
    n_columns: int,
    budget: Optional[int] = None,
    reference_sparsity: Optional[float] = None,
) -> DensityReport:
    """Compare the indexed-table, pivot-table and tensor storage of one tensorization.

    A quoted ``reference_sparsity`` for the same data is echoed with a note when the
    computed sparsity disagrees with it beyond rounding to 0.1%.
    """
    tensor = table.tensor
    size = tensor.size
    dense_bytes = size * BYTES_PER_SCALAR
    budget = get_memory_budget() if budget is None else budget
    return DensityReport(
        shape=list(tensor.shape),
        indexed_cells=n_rows * n_columns,
        pivot_rows=table.pivot_rows,
        tensor_size=size,
        nnz=tensor.nnz,
        density=tensor.density,
        sparsity=1.0 - tensor.density,
        dense_bytes=dense_bytes,
        fits_memory_budget=dense_bytes <= budget,
        skipped_rows=table.skipped_rows,
        collision_count=table.collision_count,
        reference_sparsity=reference_sparsity,
        note=_sparsity_note(1.0 - tensor.density, reference_sparsity),
    )


def _aggregate(tensor: SparseTensor, axis: int, new_index: Callable[[np.ndarray], np.ndarray], extent: int, aggregation: Aggregation) -> SparseTensor:
    index, values = tensor.coordinates()
    shape = tensor.shape[:axis] + (extent,) + tensor.shape[axis + 1:]
    if not len(values):
        return SparseTensor(shape, {})
    index = index.copy()
    index[:, axis] = new_index(index[:, axis])
    frame = pd.DataFrame(index).assign(_value=values)
    how = "size" if aggregation == "count" else aggregation
    grouped = frame.groupby(list(range(tensor.ndim)), sort=True)["_value"].agg(how)
    keys = grouped.index.to_frame(index=False).to_numpy(dtype=np.int64)
    return SparseTensor.from_entries(shape, zip(map(tuple, keys), grouped.to_numpy(dtype=np.float64)))


def quantize(tensor: SparseTensor, mode: int, bin_size: int, aggregation: Aggregation = "mean", offset: int = 0) -> SparseTensor:
    """Merge runs of ``bin_size`` indices along ``mode``; ``offset`` shifts where bins start."""
    axis = check_mode(mode, tensor.ndim)
    if bin_size < 1:
        raise DataError("bin_size must be >= 1.")
    if offset < 0:
        raise DataError("offset must be >= 0.")
    if bin_size == 1 and offset == 0:
        return tensor
    extent = math.ceil((tensor.shape[axis] + offset) / bin_size)
    return _aggregate(tensor, axis, lambda i: (i + offset) // bin_size, extent, aggregation)


def seasonal_fold(tensor: SparseTensor, mode: int, period: int, aggregation: Aggregation = "mean", offset: int = 0) -> SparseTensor:
    """Fold a time mode onto one cycle of ``period`` positions (e.g. months of the year)."""
    axis = check_mode(mode, tensor.ndim)
    if period < 1:
        raise DataError("period must be >= 1.")
    return _aggregate(tensor, axis, lambda i: (i + offset) % period, period, aggregation)
