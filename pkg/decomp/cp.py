# decomp/cp.py
"""CP decomposition by alternating least squares."""
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from decomp.models import CpModel, FitReport, relative_error
from exceptions import DataError
from linalg.kernels import leading_left_singular_vectors, solve_ridge
from settings import get_default_seed
from tensor_core.ops import fold, frobenius_norm, unfold, unfolding_khatri_rao
from tensor_core.tensor import DenseTensor, Matrix, as_dense

logger = logging.getLogger(__name__)

EXACT_FIT = 1e-15


def cp_reconstruct(model: CpModel) -> DenseTensor:
    """Sum over r of weights[r] times the outer product of the r-th factor columns."""
    factors = model.factors
    if len(factors) == 1:
        return factors[0] @ model.weights
    unfolded = (factors[0] * model.weights) @ unfolding_khatri_rao(factors, 1).T
    return fold(unfolded, 1, model.shape)


def normalize_columns(factors: Sequence[Matrix], weights: Optional[np.ndarray] = None) -> Tuple[np.ndarray, List[Matrix]]:
    """Move every column norm into the weights; zero columns get weight 0 and a flat unit column."""
    rank = factors[0].shape[1]
    weights = np.ones(rank) if weights is None else weights.astype(np.float64).copy()
    normalized = []
    for factor in factors:
        norms = np.linalg.norm(factor, axis=0)
        dead = norms == 0.0
        factor = factor / np.where(dead, 1.0, norms)
        if dead.any():
            factor[:, dead] = 1.0 / np.sqrt(factor.shape[0])
        weights = weights * norms
        normalized.append(factor)
    return weights, normalized


def canonical_cp(weights: np.ndarray, factors: Sequence[Matrix]) -> CpModel:
    """Unit columns, sign convention on all but the last factor, weights sorted descending."""
    weights, factors = normalize_columns(factors, weights)
    flips = weights < 0
    weights = np.abs(weights)
    factors[-1] = factors[-1] * np.where(flips, -1.0, 1.0)
    for n in range(len(factors) - 1):
        column = factors[n]
        pivots = column[np.argmax(np.abs(column), axis=0), np.arange(column.shape[1])]
        signs = np.where(pivots < 0, -1.0, 1.0)
        factors[n] = column * signs
        factors[-1] = factors[-1] * signs
    order = np.argsort(-weights, kind="stable")
    return CpModel(weights=weights[order], factors=tuple(f[:, order] for f in factors))


def random_factors(shape: Sequence[int], rank: int, rng: np.random.Generator) -> List[Matrix]:
    return [rng.standard_normal((extent, rank)) for extent in shape]


def hosvd_factors(tensor: DenseTensor, rank: int, rng: np.random.Generator) -> List[Matrix]:
    factors = []
    for mode, extent in enumerate(tensor.shape, start=1):
        kept = min(rank, extent)
        leading = leading_left_singular_vectors(unfold(tensor, mode), kept)
        if kept < rank:
            leading = np.hstack([leading, rng.standard_normal((extent, rank - kept))])
        factors.append(leading)
    return factors


def _als_run(tensor: DenseTensor, factors: List[Matrix], max_iters: int, tol: float) -> Tuple[CpModel, FitReport]:
    n_modes = tensor.ndim
    rank = factors[0].shape[1]
    weights = np.ones(rank)
    unfoldings = [unfold(tensor, mode) for mode in range(1, n_modes + 1)]
    report = FitReport(method="cp_als")
    for iteration in range(1, max_iters + 1):
        for n in range(n_modes):
            gram = np.ones((rank, rank))
            for k in range(n_modes):
                if k != n:
                    gram *= factors[k].T @ factors[k]
            if n_modes == 1:
                mttkrp = unfoldings[0] @ np.ones((1, rank))
            else:
                mttkrp = unfoldings[n] @ unfolding_khatri_rao(factors, n + 1)
            factors[n] = solve_ridge(gram, mttkrp.T).T
            weights = np.linalg.norm(factors[n], axis=0)
            factors[n] = factors[n] / np.where(weights == 0.0, 1.0, weights)
        model = CpModel(weights=weights, factors=tuple(factors))
        error = relative_error(tensor, cp_reconstruct(model))
        report.errors.append(error)
        report.iterations = iteration
        logger.debug(f"cp_als iteration {iteration}: relative error {error:.3e}")
        if error < EXACT_FIT or (iteration > 1 and report.errors[-2] - error < tol):
            report.converged = True
            break
    return canonical_cp(weights, factors), report


def cp_als(
    tensor,
    rank: int,
    *,
    max_iters: int = 500,
    tol: float = 1e-8,
    seed: Optional[int] = None,
    restarts: int = 3,
    init: Literal["random", "hosvd"] = "random",
) -> Tuple[CpModel, FitReport]:
    """Fit a rank-``rank`` CP model; the best of ``restarts`` starts is returned."""
    tensor = as_dense(tensor)
    if rank < 1:
        raise DataError(f"CP rank must be >= 1, got {rank}.")
    if frobenius_norm(tensor) == 0.0:
        raise DataError("Cannot fit CP to an all-zero tensor.")
    if max_iters < 1 or restarts < 1:
        raise DataError("max_iters and restarts must be >= 1.")
    seed = get_default_seed() if seed is None else seed
    logger.info(f"cp_als: rank {rank} on shape {tensor.shape}, {restarts} start(s), init={init}")

    best = None
    children = np.random.SeedSequence(seed).spawn(restarts)
    for start, child in enumerate(children):
        rng = np.random.default_rng(child)
        if init == "hosvd" and start == 0:
            factors = hosvd_factors(tensor, rank, rng)
        else:
            factors = random_factors(tensor.shape, rank, rng)
        model, report = _als_run(tensor, factors, max_iters, tol)
        logger.debug(f"cp_als start {start}: error {report.final_error:.3e} after {report.iterations} sweeps")
        if best is None or report.final_error < best[1].final_error:
            best = (model, report)
    model, report = best
    if not report.converged:
        logger.warning(f"cp_als did not converge in {max_iters} iterations (error {report.final_error:.3e})")
    return model, report


def rank_sweep(tensor, ranks: Sequence[int], **options) -> List[Tuple[int, float]]:
    """CP error curve over candidate ranks, for inspection; no rank is selected."""
    curve = []
    for rank in ranks:
        _, report = cp_als(tensor, rank, **options)
        curve.append((rank, report.final_error))
    return curve
