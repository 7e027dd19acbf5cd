# learn/learn_commands.py
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import Field, FilePath, model_validator

from cli.router import CommandRequest, CommandRouter, OutputRequest, RunContext
from decomp.decomp_commands import finish_fit, write_report
from decomp.model_io import write_model
from exceptions import DataError
from learn.completion import completed_tensor, cp_complete
from learn.params import param_count
from learn.regression import (
    RegressionSample,
    cp_regression_fit,
    predict_many,
    tucker_regression_fit,
    write_regression_model,
)
from settings import get_default_seed
from tensor_core.tensor_io import read_csv_frame, read_dense, read_sparse, write_tensor

router = CommandRouter()


# --- Pydantic Models ---
class RegressRequest(OutputRequest):
    samples: FilePath = Field(description="CSV of file, covariate columns..., y; files relative to the CSV")
    kind: Literal["cp", "tucker"] = "cp"
    rank: Optional[int] = Field(None, ge=1)
    ranks: Optional[List[int]] = None
    lam: float = Field(1e-6, ge=0)
    max_iters: int = Field(500, ge=1)
    tol: float = Field(1e-10, ge=0)
    seed: int = Field(default_factory=get_default_seed)


class CompleteRequest(OutputRequest):
    input: FilePath = Field(description="observed entries, sparse tensor file")
    mask: FilePath = Field(description="0/1 mask of the same shape")
    rank: int = Field(ge=1)
    max_iters: int = Field(500, ge=1)
    tol: float = Field(1e-10, ge=0)
    restarts: int = Field(1, ge=1)
    pure_model: bool = False
    seed: int = Field(default_factory=get_default_seed)


class ParamsRequest(CommandRequest):
    kind: Literal["cp", "tucker", "vectorized"]
    dims: List[int]
    rank: Optional[int] = Field(None, ge=1, description="CP rank")
    ranks: Optional[List[int]] = Field(None, description="Tucker ranks")
    covariates: int = Field(0, ge=0)
    mode: Literal["raw", "effective"] = "raw"

    @model_validator(mode="after")
    def _needs_ranks(self):
        if self.kind == "cp" and self.rank is None:
            raise ValueError("cp needs --rank")
        if self.kind == "tucker" and self.ranks is None:
            raise ValueError("tucker needs --ranks")
        return self


def read_samples(path: Path) -> List[RegressionSample]:
    """Rows of ``file, covariates..., y``; tensor files resolve against the CSV's directory."""
    frame = read_csv_frame(path)
    if len(frame.columns) < 2 or frame.columns[0] != "file" or frame.columns[-1] != "y":
        raise DataError(f"{path}: expected columns file, covariates..., y.")
    samples = []
    for row, record in enumerate(frame.itertuples(index=False), start=2):
        tensor_path = path.parent / str(record[0])
        if not tensor_path.is_file():
            raise DataError(f"{path}:{row}: tensor file {tensor_path} does not exist.")
        try:
            z = np.array(record[1:-1], dtype=np.float64)
            y = float(record[-1])
        except (TypeError, ValueError):
            raise DataError(f"{path}:{row}: covariates and y must be numeric.")
        samples.append(RegressionSample(x=read_dense(tensor_path), z=z, y=y))
    if not samples:
        raise DataError(f"{path}: no samples.")
    return samples


# --- Commands ---
@router.command("regress", RegressRequest, help="scalar-on-tensor regression with CP or Tucker coefficients")
def regress_command(request: RegressRequest, context: RunContext) -> int:
    samples = read_samples(request.samples)
    options = {"max_iters": request.max_iters, "tol": request.tol, "seed": request.seed}
    if request.kind == "cp":
        if request.rank is None:
            raise DataError("CP regression needs --rank.")
        model, report = cp_regression_fit(samples, request.rank, request.lam, **options)
    else:
        if request.ranks is None:
            raise DataError("Tucker regression needs --ranks.")
        model, report = tucker_regression_fit(samples, request.ranks, request.lam, **options)

    write_regression_model(context.path("regression_model.txt"), model)
    write_report(context, report)
    predictions = pd.DataFrame({"y": [s.y for s in samples], "prediction": predict_many(model, samples)})
    predictions.to_csv(context.path("predictions.csv"), index=False, float_format="%.17g")
    return finish_fit(context, report)


@router.command("complete", CompleteRequest, help="fill unobserved entries with a masked CP model")
def complete_command(request: CompleteRequest, context: RunContext) -> int:
    observed = read_sparse(request.input)
    mask = read_sparse(request.mask)
    model, report = cp_complete(
        observed,
        mask,
        request.rank,
        max_iters=request.max_iters,
        tol=request.tol,
        seed=request.seed,
        restarts=request.restarts,
    )
    write_model(context.path("model.txt"), model)
    write_tensor(context.path("completed.txt"), completed_tensor(model, observed, mask, request.pure_model))
    write_report(context, report)
    return finish_fit(context, report)


@router.command("params", ParamsRequest, help="parameter counts of regression models")
def params_command(request: ParamsRequest, context: RunContext) -> int:
    ranks = [request.rank] if request.kind == "cp" else (request.ranks or [])
    context.echo(str(param_count(request.kind, request.dims, ranks, request.covariates, request.mode)))
    return 0
