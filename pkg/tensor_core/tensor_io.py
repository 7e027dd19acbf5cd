# tensor_core/tensor_io.py
"""Tensor text format.

Line 1 is ``shape: I1,I2,...,IN``; every following line is
``i1,...,iN,value`` with 0-based indices and ``%.17g`` values. Dense tensors
list every cell in row-major order; sparse tensors list their entries sorted.
"""
from pathlib import Path
from typing import Iterable, List, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from exceptions import DataError
from tensor_core.tensor import DenseTensor, SparseTensor, as_dense, as_shape, sparse_to_dense

PathLike = Union[str, Path]

SCALAR_FORMAT = "%.17g"


def format_scalar(value: float) -> str:
    return SCALAR_FORMAT % float(value)


def format_shape(shape: Iterable[int]) -> str:
    return ",".join(str(int(d)) for d in shape)


def parse_shape(text: str) -> Tuple[int, ...]:
    try:
        return as_shape(int(part) for part in text.split(","))
    except ValueError:
        raise DataError(f"Invalid shape {text!r}.")


def read_csv_frame(path: PathLike, **options) -> pd.DataFrame:
    """``pd.read_csv`` with unreadable files reported as data errors naming the file."""
    try:
        return pd.read_csv(path, **options)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"{path}: {e}")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not UTF-8 text ({e.reason}).")


def read_text_lines(path: PathLike) -> List[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not UTF-8 text ({e.reason}).")


def _write_rows(stream: TextIO, rows: np.ndarray, n_modes: int) -> None:
    np.savetxt(stream, rows.reshape(-1, n_modes + 1), fmt=["%d"] * n_modes + [SCALAR_FORMAT], delimiter=",")


def dump_tensor(tensor: Union[SparseTensor, DenseTensor], stream: TextIO) -> None:
    if isinstance(tensor, SparseTensor):
        keys = sorted(tensor.entries)
        indices = np.array(keys, dtype=np.float64).reshape(len(keys), len(tensor.shape))
        values = np.array([tensor.entries[key] for key in keys], dtype=np.float64)
    else:
        tensor = as_dense(tensor)
        indices = np.indices(tensor.shape).reshape(tensor.ndim, -1).T.astype(np.float64)
        values = tensor.ravel()
    stream.write(f"shape: {format_shape(tensor.shape)}\n")
    _write_rows(stream, np.column_stack([indices, values]), len(tensor.shape))


def write_tensor(path: PathLike, tensor: Union[SparseTensor, DenseTensor]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        dump_tensor(tensor, stream)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_rows(lines: List[str], n_modes: int, source: str, first_line: int) -> Tuple[np.ndarray, np.ndarray]:
    """Index and value columns of the entry lines, with errors naming the file line."""
    body = pd.Series(lines, index=range(first_line, first_line + len(lines)), dtype=object).str.strip()
    body = body[body != ""]
    if body.empty:
        return np.zeros((0, n_modes), dtype=np.int64), np.zeros(0)
    fields = body.str.count(",") + 1
    wrong = fields[fields != n_modes + 1]
    if not wrong.empty:
        raise DataError(f"{source}:{wrong.index[0]}: expected {n_modes + 1} fields, got {wrong.iloc[0]}.")
    cells = body.str.split(",", expand=True).apply(lambda column: column.str.strip())
    bad = ~cells.apply(lambda column: column.map(_is_number)).all(axis=1).to_numpy()
    if not bad.any():
        numbers = cells.to_numpy(dtype=np.float64)
        indices = numbers[:, :-1]
        bad = ~np.isfinite(indices).all(axis=1) | (indices != np.floor(indices)).any(axis=1)
    if bad.any():
        row = int(np.argmax(bad))
        raise DataError(f"{source}:{body.index[row]}: unparseable entry {body.iloc[row]!r}.")
    return indices.astype(np.int64), numbers[:, -1]


def parse_tensor_lines(lines: List[str], source: str = "<tensor>", first_line: int = 1) -> SparseTensor:
    """Parse one tensor block; ``first_line`` numbers errors inside a larger file."""
    if not lines or not lines[0].startswith("shape:"):
        raise DataError(f"{source}:{first_line}: expected a 'shape:' header.")
    shape = parse_shape(lines[0].split(":", 1)[1].strip())
    indices, values = _parse_rows(lines[1:], len(shape), source, first_line + 1)
    try:
        return SparseTensor.from_entries(shape, zip(map(tuple, indices.tolist()), values.tolist()))
    except DataError as e:
        if e.detail.startswith(source):
            raise
        raise DataError(f"{source}: {e.detail}")


def read_sparse(path: PathLike) -> SparseTensor:
    return parse_tensor_lines(read_text_lines(path), source=str(path))


def read_dense(path: PathLike, budget: int = None) -> DenseTensor:
    return sparse_to_dense(read_sparse(path), budget)
