# decomp/tt.py
"""Tensor-train decomposition by a left-to-right sweep of truncated SVDs."""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from decomp.models import FitReport, TtModel, relative_error
from exceptions import DataError
from linalg.kernels import pinv_cutoff, svd
from tensor_core.ops import frobenius_norm
from tensor_core.tensor import DenseTensor, as_dense

logger = logging.getLogger(__name__)


def _rank_caps(max_ranks: Union[None, int, Sequence[int]], n_bonds: int) -> Sequence[Optional[int]]:
    if max_ranks is None:
        return [None] * n_bonds
    if isinstance(max_ranks, int):
        caps = [max_ranks] * n_bonds
    else:
        caps = [int(r) for r in max_ranks]
        if len(caps) != n_bonds:
            raise DataError(f"Need {n_bonds} interior TT ranks, got {len(caps)}.")
    if any(r < 1 for r in caps):
        raise DataError("TT ranks must be >= 1.")
    return caps


def _kept_rank(s: np.ndarray, shape, cap: Optional[int], budget: Optional[float]) -> int:
    """Smallest rank whose discarded singular mass fits the budget, within the cap."""
    cutoff = pinv_cutoff(shape, s[0]) if s.size else 0.0
    rank = max(1, int(np.sum(s > cutoff)))
    if budget is not None:
        tail = np.sqrt(np.cumsum((s ** 2)[::-1]))[::-1]
        # tail[k] is the mass discarded when keeping k values
        fits = np.nonzero(np.append(tail, 0.0) <= budget)[0]
        rank = min(rank, max(1, int(fits[0])))
    if cap is not None:
        rank = min(rank, cap)
    return rank


def tt_svd(
    tensor,
    max_ranks: Union[None, int, Sequence[int]] = None,
    tol: Optional[float] = None,
) -> Tuple[TtModel, FitReport]:
    """TT cores with ``||t - t_hat||_F <= tol * ||t||_F`` when ``tol`` is given.

    Each of the N-1 truncations may discard ``tol * ||t|| / sqrt(N-1)``; the
    discarded mass per step is recorded in ``FitReport.truncation_errors``.
    """
    tensor = as_dense(tensor)
    norm = frobenius_norm(tensor)
    if norm == 0.0:
        raise DataError("Cannot decompose an all-zero tensor.")
    if tol is not None and tol < 0:
        raise DataError("tol must be >= 0.")
    shape = tensor.shape
    n_bonds = len(shape) - 1
    caps = _rank_caps(max_ranks, n_bonds)
    budget = None if tol is None or n_bonds == 0 else tol * norm / math.sqrt(n_bonds)

    cores = []
    discarded = []
    remainder = tensor.reshape(1, -1)
    left_rank = 1
    for k in range(n_bonds):
        matrix = remainder.reshape(left_rank * shape[k], -1)
        result = svd(matrix)
        rank = _kept_rank(result.S, matrix.shape, caps[k], budget)
        discarded.append(float(np.sqrt(np.sum(result.S[rank:] ** 2))))
        cores.append(result.U[:, :rank].reshape(left_rank, shape[k], rank))
        remainder = result.S[:rank, None] * result.V[:, :rank].T
        left_rank = rank
    cores.append(remainder.reshape(left_rank, shape[-1], 1))

    model = TtModel(cores=tuple(cores))
    error = relative_error(tensor, tt_reconstruct(model))
    logger.info(f"tt_svd: shape {shape} -> ranks {model.ranks}, relative error {error:.3e}")
    report = FitReport(method="tt_svd", errors=[error], iterations=n_bonds, converged=True, truncation_errors=discarded)
    return model, report


def tt_reconstruct(model: TtModel) -> DenseTensor:
    """Contract the cores left to right over their shared rank indices."""
    result = model.cores[0].reshape(-1, model.cores[0].shape[-1])
    for core in model.cores[1:]:
        r_left, extent, r_right = core.shape
        result = (result @ core.reshape(r_left, extent * r_right)).reshape(-1, r_right)
    return result.reshape(model.shape)
