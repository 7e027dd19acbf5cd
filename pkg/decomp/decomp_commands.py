# decomp/decomp_commands.py
import sys
from typing import List, Literal, Optional

from pydantic import Field, FilePath

from cli.router import CommandRouter, OutputRequest, RunContext
from decomp.cp import cp_als
from decomp.model_io import write_model
from decomp.models import FitReport, relative_error
from decomp.tt import tt_svd
from decomp.tucker import hooi, hosvd, tucker_reconstruct
from exceptions import DataError, NumericalError
from settings import get_default_seed
from tensor_core.tensor_io import format_scalar, read_dense

router = CommandRouter()


# --- Pydantic Models ---
class DecomposeRequest(OutputRequest):
    input: FilePath = Field(description="tensor file, sparse or dense layout")
    kind: Literal["cp", "hosvd", "hooi", "tt"] = "cp"
    rank: Optional[int] = Field(None, ge=1, description="CP rank")
    ranks: Optional[List[int]] = Field(None, description="Tucker ranks, or TT interior rank caps")
    tol: Optional[float] = Field(None, ge=0)
    max_iters: int = Field(500, ge=1)
    restarts: int = Field(3, ge=1)
    init: Literal["random", "hosvd"] = "random"
    seed: int = Field(default_factory=get_default_seed)


def write_report(context: RunContext, report: FitReport, name: str = "fit_report.json") -> None:
    context.path(name).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")


def finish_fit(context: RunContext, report: FitReport) -> int:
    """Summary line, then exit status 4 when an iterative fit stopped unconverged."""
    context.echo(f"{report.method}: final error {format_scalar(report.final_error)} after {report.iterations} iteration(s)")
    if not report.converged:
        sys.stderr.write(f"{report.method} did not converge in {report.iterations} iterations\n")
        return NumericalError.exit_code
    return 0


# --- Commands ---
@router.command("decompose", DecomposeRequest, help="CP, Tucker (HOSVD/HOOI) or TT decomposition")
def decompose_command(request: DecomposeRequest, context: RunContext) -> int:
    tensor = read_dense(request.input)
    if request.kind == "cp":
        if request.rank is None:
            raise DataError("CP decomposition needs --rank.")
        options = {"max_iters": request.max_iters, "seed": request.seed, "restarts": request.restarts, "init": request.init}
        if request.tol is not None:
            options["tol"] = request.tol
        model, report = cp_als(tensor, request.rank, **options)
    elif request.kind in ("hosvd", "hooi"):
        if request.ranks is None:
            raise DataError("Tucker decomposition needs --ranks.")
        if request.kind == "hosvd":
            model = hosvd(tensor, request.ranks)
            error = relative_error(tensor, tucker_reconstruct(model))
            report = FitReport(method="hosvd", errors=[error], iterations=1, converged=True)
        else:
            options = {"max_iters": request.max_iters, "seed": request.seed}
            if request.tol is not None:
                options["tol"] = request.tol
            model, report = hooi(tensor, request.ranks, **options)
    else:
        model, report = tt_svd(tensor, max_ranks=request.ranks, tol=request.tol)

    write_model(context.path("model.txt"), model)
    write_report(context, report)
    return finish_fit(context, report)
