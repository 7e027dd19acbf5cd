# compress/compress_commands.py
from typing import List, Optional

from pydantic import Field, FilePath

from cli.router import CommandRouter, OutputRequest, RunContext
from compress.tt_layer import compression_report, matrix_to_tt_layer, write_layer
from exceptions import DataError
from tensor_core.tensor_io import format_scalar, read_dense

router = CommandRouter()


# --- Pydantic Models ---
class TtCompressRequest(OutputRequest):
    weights: FilePath = Field(description="dense N x M weight matrix (outputs by inputs)")
    bias: Optional[FilePath] = Field(None, description="bias vector of length N; zeros when absent")
    m_dims: List[int] = Field(description="input factorization, product M")
    n_dims: List[int] = Field(description="output factorization, product N")
    max_ranks: Optional[List[int]] = Field(None, description="one cap for every bond, or d - 1 caps")
    tol: Optional[float] = Field(None, ge=0)


# --- Commands ---
@router.command("tt-compress", TtCompressRequest, help="store a dense layer's weights as a TT-matrix")
def tt_compress_command(request: TtCompressRequest, context: RunContext) -> int:
    weights = read_dense(request.weights)
    if weights.ndim != 2:
        raise DataError(f"{request.weights}: weights must be a matrix, got {weights.ndim} modes.")
    bias = None if request.bias is None else read_dense(request.bias)
    max_ranks = request.max_ranks
    if max_ranks is not None and len(max_ranks) == 1:
        max_ranks = max_ranks[0]
    layer = matrix_to_tt_layer(weights, bias, request.m_dims, request.n_dims, max_ranks=max_ranks, tol=request.tol)
    report = compression_report(layer)

    write_layer(context.path("tt_layer.txt"), layer)
    context.path("compression_report.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    context.echo(f"ranks: {','.join(str(r) for r in report.ranks)}")
    context.echo(f"dense params: {report.dense_params}, tt params: {report.tt_params}, ratio {format_scalar(report.ratio)}")
    return 0
