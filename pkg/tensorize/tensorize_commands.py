# tensorize/tensorize_commands.py
from collections import OrderedDict
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import Field, FilePath, ValidationError

from cli.router import CommandRequest, CommandRouter, OutputRequest, RunContext
from cli.run_config import read_key_values
from exceptions import DataError
from tensor_core.ops import vector_norm
from tensor_core.tensor import DenseTensor
from tensor_core.tensor_io import format_scalar, read_csv_frame, read_dense, write_tensor
from tensorize.hankel import hankelize, hankelize_channels
from tensorize.statistics import central_moments, cumulant_tensor, lagged_covariance
from tensorize.table import Aggregation, ColumnSpec, quantize, seasonal_fold, storage_report, tensorize_table

router = CommandRouter()


# --- Pydantic Models ---
class TensorizeRequest(OutputRequest):
    input: FilePath = Field(description="CSV table with a header row")
    plan: FilePath = Field(description="plan file: column.<name>.<attr> = value lines")
    quantize_mode: Optional[int] = Field(None, ge=1, description="mode to coarsen after pivoting")
    quantize_bin: int = Field(1, ge=1)
    quantize_offset: int = Field(0, ge=0)
    fold_mode: Optional[int] = Field(None, ge=1, description="mode to fold cyclically")
    fold_period: Optional[int] = Field(None, ge=1)
    fold_offset: int = Field(0, ge=0)
    aggregation: Aggregation = "mean"
    reference_sparsity: Optional[float] = Field(None, ge=0, le=1, description="quoted sparsity to check the computed one against")


class HankelizeRequest(OutputRequest):
    input: FilePath = Field(description="tensor file holding a vector or a channels-by-samples matrix")
    window: int = Field(ge=1)


class StatsRequest(CommandRequest):
    input: FilePath = Field(description="CSV with a header; columns are variables, rows observations")
    norms: bool = False
    moment: Optional[int] = Field(None, ge=1, description="central moment order of all values")
    cumulant: Optional[int] = Field(None, ge=2, le=4)
    lags: Optional[List[int]] = Field(None, description="lags of the lagged covariance tensor")
    output_dir: Optional[Path] = None


def read_plan(path: Path) -> List[ColumnSpec]:
    """``column.<name>.<attr> = value`` lines to column specs, in first-mention order."""
    columns = OrderedDict()
    for key, value in read_key_values(path).items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "column":
            raise DataError(f"{path}: plan keys look like column.<name>.<attr>, got {key!r}.")
        columns.setdefault(parts[1], {"name": parts[1]})[parts[2]] = value
    try:
        return [ColumnSpec.model_validate(attrs) for attrs in columns.values()]
    except ValidationError as e:
        raise DataError(f"{path}: invalid plan: {e.errors()[0]['msg']}")


def read_table(path: Path) -> pd.DataFrame:
    return read_csv_frame(path, dtype=str, keep_default_na=False)


def _write_axis_maps(path: Path, axis_maps) -> None:
    rows = [
        {"mode": mode, "index": index, "original_key": key, "name": axis.name}
        for mode, axis in enumerate(axis_maps, start=1)
        for index, key in enumerate(axis.keys)
    ]
    pd.DataFrame(rows, columns=["mode", "index", "original_key", "name"]).to_csv(path, index=False)


# --- Commands ---
@router.command("tensorize", TensorizeRequest, help="pivot a CSV table into a sparse tensor")
def tensorize_command(request: TensorizeRequest, context: RunContext) -> int:
    frame = read_table(request.input)
    table = tensorize_table(frame, read_plan(request.plan))
    report = storage_report(
        table, n_rows=len(frame), n_columns=len(frame.columns), reference_sparsity=request.reference_sparsity
    )
    tensor = table.tensor
    if request.quantize_mode is not None:
        tensor = quantize(tensor, request.quantize_mode, request.quantize_bin, request.aggregation, request.quantize_offset)
    if request.fold_mode is not None:
        if request.fold_period is None:
            raise DataError("fold_mode needs fold_period.")
        tensor = seasonal_fold(tensor, request.fold_mode, request.fold_period, request.aggregation, request.fold_offset)

    write_tensor(context.path("tensor.txt"), tensor)
    _write_axis_maps(context.path("axis_maps.csv"), table.axis_maps)
    context.path("density_report.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    context.echo(f"shape: {','.join(str(d) for d in tensor.shape)}")
    context.echo(f"size: {tensor.size}")
    context.echo(f"nnz: {tensor.nnz}")
    context.echo(f"density: {format_scalar(tensor.density)}")
    if report.note:
        context.echo(f"note: {report.note}")
    return 0


@router.command("hankelize", HankelizeRequest, help="Hankel matrix of a signal or Hankel tensor of channels")
def hankelize_command(request: HankelizeRequest, context: RunContext) -> int:
    signal = read_dense(request.input)
    if signal.ndim == 1:
        result = hankelize(signal, request.window)
    elif signal.ndim == 2:
        result = hankelize_channels(signal, request.window)
    else:
        raise DataError(f"{request.input}: expected a vector or a matrix, got {signal.ndim} modes.")
    write_tensor(context.path("hankel.txt"), result)
    context.echo(f"shape: {','.join(str(d) for d in result.shape)}")
    return 0


def _read_numeric_csv(path: Path) -> DenseTensor:
    frame = read_csv_frame(path)
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    if numeric.isna().any().any():
        row, column = np.argwhere(numeric.isna().to_numpy())[0]
        raise DataError(f"{path}:{row + 2}: column {frame.columns[column]!r} is not numeric.")
    return numeric.to_numpy(dtype=np.float64)


@router.command("stats", StatsRequest, help="norms, moments, cumulants and lagged covariances")
def stats_command(request: StatsRequest, context: RunContext) -> int:
    data = _read_numeric_csv(request.input)
    if request.norms:
        values = data.ravel()
        context.echo(f"l1: {format_scalar(vector_norm(values, 1))}")
        context.echo(f"l2: {format_scalar(vector_norm(values, 2))}")
        context.echo(f"linf: {format_scalar(vector_norm(values, 'inf'))}")
    if request.moment is not None:
        context.echo(f"moment_{request.moment}: {format_scalar(central_moments(data, request.moment))}")
    writes = request.output_dir is not None
    if request.cumulant is not None:
        cumulant = cumulant_tensor(data, request.cumulant)
        context.echo(f"cumulant_{request.cumulant}: shape {','.join(str(d) for d in cumulant.shape)}")
        if writes:
            write_tensor(context.path(f"cumulant_{request.cumulant}.txt"), cumulant)
    if request.lags:
        covariance = lagged_covariance(data.T, request.lags)
        context.echo(f"lagged_covariance: shape {','.join(str(d) for d in covariance.shape)}")
        if writes:
            write_tensor(context.path("lagged_covariance.txt"), covariance)
    return 0
