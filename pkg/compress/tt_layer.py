# compress/tt_layer.py
"""Fully connected layer ``y = W x + b`` with W stored as a TT-matrix.

W is ``N x M`` (outputs by inputs). Mode k of the weight tensor pairs the
output index n_k with the input index m_k; each core has shape
``(r_{k-1}, n_k, m_k, r_k)``.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from decomp.model_io import read_container, write_container
from decomp.tt import tt_svd
from exceptions import DataError
from tensor_core.tensor import DenseTensor, Matrix, as_dense
from tensor_core.tensor_io import format_shape, parse_shape

logger = logging.getLogger(__name__)


class CompressionReport(BaseModel):
    input_size: int
    output_size: int
    ranks: List[int]
    dense_params: int
    tt_params: int
    ratio: float
    dense_weight_params: int
    tt_weight_params: int
    weight_ratio: float


@dataclass(frozen=True)
class TtLayer:
    m_dims: Tuple[int, ...]
    n_dims: Tuple[int, ...]
    cores: Tuple[DenseTensor, ...]
    bias: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m_dims", tuple(int(m) for m in self.m_dims))
        object.__setattr__(self, "n_dims", tuple(int(n) for n in self.n_dims))
        object.__setattr__(self, "cores", tuple(self.cores))
        if len(self.m_dims) != len(self.n_dims) or len(self.cores) != len(self.m_dims):
            raise DataError("A TT layer needs one core per (n_k, m_k) pair.")
        if self.cores[0].shape[0] != 1 or self.cores[-1].shape[-1] != 1:
            raise DataError("TT layer boundary ranks must be 1.")
        for k, core in enumerate(self.cores):
            if core.ndim != 4 or core.shape[1:3] != (self.n_dims[k], self.m_dims[k]):
                raise DataError(f"Core {k + 1} has shape {core.shape}, expected (r, {self.n_dims[k]}, {self.m_dims[k]}, r').")
            if k and self.cores[k - 1].shape[-1] != core.shape[0]:
                raise DataError(f"Rank mismatch between cores {k} and {k + 1}.")
        if self.bias.shape != (self.output_size,):
            raise DataError(f"Bias must have length {self.output_size}.")

    @property
    def input_size(self) -> int:
        return math.prod(self.m_dims)

    @property
    def output_size(self) -> int:
        return math.prod(self.n_dims)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return (1,) + tuple(core.shape[-1] for core in self.cores)


def _check_factorization(dims: Sequence[int], size: int, label: str) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims) or math.prod(dims) != size:
        raise DataError(f"{label} factorization {dims} does not multiply to {size}.")
    return dims


def matrix_to_tt_layer(
    weights,
    bias,
    m_dims: Sequence[int],
    n_dims: Sequence[int],
    max_ranks: Union[None, int, Sequence[int]] = None,
    tol: Optional[float] = None,
) -> TtLayer:
    """Reshape an ``N x M`` weight matrix into paired modes and factor it with TT-SVD."""
    w: Matrix = as_dense(weights)
    if w.ndim != 2:
        raise DataError(f"Weights must be a matrix, got shape {w.shape}.")
    n_dims = _check_factorization(n_dims, w.shape[0], "Output")
    m_dims = _check_factorization(m_dims, w.shape[1], "Input")
    if len(m_dims) != len(n_dims):
        raise DataError("Input and output factorizations need the same number of modes.")
    bias = np.zeros(w.shape[0]) if bias is None else as_dense(bias).ravel()
    d = len(m_dims)

    paired = w.reshape(n_dims + m_dims)
    order = [axis for k in range(d) for axis in (k, d + k)]
    merged = paired.transpose(order).reshape([n * m for n, m in zip(n_dims, m_dims)])
    model, report = tt_svd(merged, max_ranks=max_ranks, tol=tol)
    cores = tuple(
        core.reshape(core.shape[0], n, m, core.shape[-1]) for core, n, m in zip(model.cores, n_dims, m_dims)
    )
    logger.info(f"matrix_to_tt_layer: {w.shape} -> ranks {model.ranks}, weight error {report.final_error:.3e}")
    return TtLayer(m_dims=m_dims, n_dims=n_dims, cores=cores, bias=bias.copy())


def tt_layer_forward(layer: TtLayer, x) -> np.ndarray:
    """Apply the layer core by core to one input vector or a ``(B, M)`` batch."""
    x = as_dense(x)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != layer.input_size:
        raise DataError(f"Input length {batch.shape[-1]} does not match the layer input size {layer.input_size}.")
    # state axes: (batch, outputs so far, rank, remaining inputs)
    state = batch.reshape(batch.shape[0], 1, 1, layer.input_size)
    for core, m in zip(layer.cores, layer.m_dims):
        b, done, rank, rest = state.shape
        state = state.reshape(b, done, rank, m, rest // m)
        state = np.einsum("barjq,rijs->baisq", state, core, optimize=True)
        state = state.reshape(b, done * core.shape[1], core.shape[-1], rest // m)
    y = state.reshape(batch.shape[0], layer.output_size) + layer.bias
    return y[0] if single else y


def layer_to_matrix(layer: TtLayer) -> Matrix:
    """Dense ``N x M`` weights of a layer; for checks only, forward never builds it."""
    return tt_layer_forward(layer, np.eye(layer.input_size)).T - layer.bias[:, None]


def tt_layer_param_counts(m_dims: Sequence[int], n_dims: Sequence[int], ranks: Sequence[int]) -> CompressionReport:
    """Counts from the factorization and the full rank vector ``(1, r_1, ..., r_{d-1}, 1)``."""
    m_dims = [int(m) for m in m_dims]
    n_dims = [int(n) for n in n_dims]
    ranks = [int(r) for r in ranks]
    if len(m_dims) != len(n_dims) or len(ranks) != len(m_dims) + 1:
        raise DataError("Need d input dims, d output dims and d + 1 ranks.")
    if ranks[0] != 1 or ranks[-1] != 1 or any(r < 1 for r in ranks):
        raise DataError("TT ranks must be >= 1 with boundary ranks 1.")
    input_size, output_size = math.prod(m_dims), math.prod(n_dims)
    tt_weights = sum(ranks[k] * n_dims[k] * m_dims[k] * ranks[k + 1] for k in range(len(m_dims)))
    dense_weights = input_size * output_size
    return CompressionReport(
        input_size=input_size,
        output_size=output_size,
        ranks=ranks,
        dense_params=dense_weights + output_size,
        tt_params=tt_weights + output_size,
        ratio=(dense_weights + output_size) / (tt_weights + output_size),
        dense_weight_params=dense_weights,
        tt_weight_params=tt_weights,
        weight_ratio=dense_weights / tt_weights,
    )


def compression_report(layer: TtLayer) -> CompressionReport:
    return tt_layer_param_counts(layer.m_dims, layer.n_dims, layer.ranks)


def write_layer(path, layer: TtLayer) -> None:
    header = {
        "m_dims": format_shape(layer.m_dims),
        "n_dims": format_shape(layer.n_dims),
        "ranks": format_shape(layer.ranks),
    }
    blocks = [(f"core {k}", core) for k, core in enumerate(layer.cores, start=1)]
    write_container(path, "tt-layer", header, [*blocks, ("bias", layer.bias)])


def read_layer(path) -> TtLayer:
    kind, header, blocks = read_container(path)
    if kind != "tt-layer":
        raise DataError(f"{path}: expected a tt-layer file, got kind {kind!r}.")
    try:
        m_dims, n_dims = parse_shape(header["m_dims"]), parse_shape(header["n_dims"])
        cores = tuple(blocks[f"core {k}"] for k in range(1, len(m_dims) + 1))
        bias = blocks["bias"]
    except KeyError as e:
        raise DataError(f"{path}: missing {e.args[0]!r}.")
    return TtLayer(m_dims=m_dims, n_dims=n_dims, cores=cores, bias=bias)
