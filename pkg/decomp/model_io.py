# decomp/model_io.py
"""Model container: ``key: value`` header lines, then named blocks in the tensor text format.

    kind: cp
    shape: 4,5,6
    ranks: 3
    --- weights
    shape: 3
    0,2.5
    ...
"""
import io
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from decomp.models import CpModel, TtModel, TuckerModel
from exceptions import DataError
from tensor_core.tensor import DenseTensor, sparse_to_dense
from tensor_core.tensor_io import dump_tensor, format_shape, parse_tensor_lines, read_text_lines

PathLike = Union[str, Path]
Model = Union[CpModel, TuckerModel, TtModel]

BLOCK_MARKER = "--- "


def write_container(path: PathLike, kind: str, header: Dict[str, str], blocks: List[Tuple[str, DenseTensor]]) -> None:
    buffer = io.StringIO()
    buffer.write(f"kind: {kind}\n")
    for key, value in header.items():
        buffer.write(f"{key}: {value}\n")
    for name, array in blocks:
        buffer.write(f"{BLOCK_MARKER}{name}\n")
        dump_tensor(np.atleast_1d(array), buffer)
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def read_container(path: PathLike) -> Tuple[str, Dict[str, str], Dict[str, DenseTensor]]:
    lines = read_text_lines(path)
    header: Dict[str, str] = {}
    blocks: Dict[str, DenseTensor] = {}
    position = 0
    while position < len(lines) and not lines[position].startswith(BLOCK_MARKER):
        if lines[position].strip():
            key, sep, value = lines[position].partition(":")
            if not sep:
                raise DataError(f"{path}:{position + 1}: expected 'key: value'.")
            header[key.strip()] = value.strip()
        position += 1
    while position < len(lines):
        name = lines[position][len(BLOCK_MARKER):].strip()
        start = position + 1
        position = start
        while position < len(lines) and not lines[position].startswith(BLOCK_MARKER):
            position += 1
        tensor = parse_tensor_lines(lines[start:position], source=str(path), first_line=start + 1)
        blocks[name] = sparse_to_dense(tensor)
    kind = header.pop("kind", None)
    if kind is None:
        raise DataError(f"{path}: missing 'kind' header.")
    return kind, header, blocks


def _factor_blocks(factors) -> List[Tuple[str, DenseTensor]]:
    return [(f"factor {n}", factor) for n, factor in enumerate(factors, start=1)]


def _numbered(blocks: Dict[str, DenseTensor], prefix: str) -> Tuple[DenseTensor, ...]:
    count = sum(1 for name in blocks if name.startswith(prefix + " "))
    try:
        return tuple(blocks[f"{prefix} {n}"] for n in range(1, count + 1))
    except KeyError as e:
        raise DataError(f"Model file is missing block {e.args[0]!r}.")


def write_model(path: PathLike, model: Model) -> None:
    header = {"shape": format_shape(model.shape)}
    if isinstance(model, CpModel):
        header["ranks"] = str(model.rank)
        write_container(path, "cp", header, [("weights", model.weights), *_factor_blocks(model.factors)])
    elif isinstance(model, TuckerModel):
        header["ranks"] = format_shape(model.ranks)
        write_container(path, "tucker", header, [("core", model.core), *_factor_blocks(model.factors)])
    elif isinstance(model, TtModel):
        header["ranks"] = format_shape(model.ranks)
        blocks = [(f"core {n}", core) for n, core in enumerate(model.cores, start=1)]
        write_container(path, "tt", header, blocks)
    else:
        raise DataError(f"Cannot serialize {type(model).__name__}.")


def read_model(path: PathLike) -> Model:
    kind, _, blocks = read_container(path)
    if kind == "cp":
        return CpModel(weights=blocks["weights"], factors=_numbered(blocks, "factor"))
    if kind == "tucker":
        return TuckerModel(core=blocks["core"], factors=_numbered(blocks, "factor"))
    if kind == "tt":
        return TtModel(cores=_numbered(blocks, "core"))
    raise DataError(f"{path}: unknown model kind {kind!r}.")
