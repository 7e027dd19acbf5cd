# learn/completion.py
"""Low-rank CP completion by masked alternating least squares."""
import logging
from typing import Optional, Tuple

import numpy as np

from decomp.cp import canonical_cp, cp_als, cp_reconstruct, random_factors
from decomp.models import CpModel, FitReport
from exceptions import DataError, UnderdeterminedError
from linalg.kernels import solve_ridge
from settings import get_default_seed
from tensor_core.ops import unfold, unfolding_khatri_rao
from tensor_core.tensor import DenseTensor, SparseTensor, sparse_to_dense

logger = logging.getLogger(__name__)


def observation_mask(mask: SparseTensor, shape) -> DenseTensor:
    """Validate a {0,1} mask of the data shape and densify it."""
    if mask.shape != tuple(shape):
        raise DataError(f"Mask shape {mask.shape} does not match data shape {tuple(shape)}.")
    dense = sparse_to_dense(mask)
    if not np.isin(dense, (0.0, 1.0)).all():
        raise DataError("Mask values must be exactly 0 or 1.")
    if not dense.any():
        raise DataError("Mask has no observed entries.")
    return dense


def _check_slices(mask: DenseTensor) -> None:
    for axis in range(mask.ndim):
        observed = mask.sum(axis=tuple(a for a in range(mask.ndim) if a != axis))
        empty = np.nonzero(observed == 0)[0]
        if empty.size:
            raise UnderdeterminedError(mode=axis + 1, index=int(empty[0]))


def _masked_error(data: DenseTensor, mask: DenseTensor, model: CpModel, norm: float) -> float:
    residual = mask * (data - cp_reconstruct(model))
    return float(np.linalg.norm(residual.ravel())) / norm


def cp_complete(
    observed: SparseTensor,
    mask: SparseTensor,
    rank: int,
    *,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
    restarts: int = 1,
) -> Tuple[CpModel, FitReport]:
    """Fit CP to the observed entries only; each factor row is its own least-squares problem."""
    if rank < 1:
        raise DataError(f"CP rank must be >= 1, got {rank}.")
    if observed.ndim < 2:
        raise DataError("Completion needs a tensor with at least 2 modes.")
    observed_mask = observation_mask(mask, observed.shape)
    data = sparse_to_dense(observed)
    if np.any(data[observed_mask == 0.0] != 0.0):
        raise DataError("Observed tensor has values outside the mask.")
    seed = get_default_seed() if seed is None else seed
    if observed_mask.all():
        logger.info("cp_complete: mask is fully observed, fitting plain CP-ALS")
        model, report = cp_als(data, rank, max_iters=max_iters, tol=tol, seed=seed, restarts=restarts)
        return model, report.model_copy(update={"method": "cp_complete"})
    _check_slices(observed_mask)
    norm = float(np.linalg.norm(data.ravel()))
    if norm == 0.0:
        raise DataError("All observed entries are zero.")

    unfolded_data = [unfold(data, n) for n in range(1, data.ndim + 1)]
    unfolded_mask = [unfold(observed_mask, n).astype(bool) for n in range(1, data.ndim + 1)]
    logger.info(f"cp_complete: rank {rank} on shape {data.shape}, {int(observed_mask.sum())} observed entries")

    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        factors = random_factors(data.shape, rank, np.random.default_rng(child))
        report = FitReport(method="cp_complete")
        for iteration in range(1, max_iters + 1):
            for n in range(data.ndim):
                khatri = unfolding_khatri_rao(factors, n + 1)
                rows = np.empty_like(factors[n])
                for i in range(data.shape[n]):
                    seen = unfolded_mask[n][i]
                    rows[i] = solve_ridge(khatri[seen], unfolded_data[n][i, seen])
                factors[n] = rows
            model = CpModel(weights=np.ones(rank), factors=tuple(factors))
            report.errors.append(_masked_error(data, observed_mask, model, norm))
            report.iterations = iteration
            logger.debug(f"cp_complete iteration {iteration}: observed error {report.errors[-1]:.3e}")
            if report.errors[-1] < 1e-15 or (iteration > 1 and report.errors[-2] - report.errors[-1] < tol):
                report.converged = True
                break
        candidate = canonical_cp(np.ones(rank), factors)
        if best is None or report.final_error < best[1].final_error:
            best = (candidate, report)
    model, report = best
    if not report.converged:
        logger.warning(f"cp_complete did not converge in {max_iters} iterations")
    return model, report


def completed_tensor(model: CpModel, observed: SparseTensor, mask: SparseTensor, pure_model: bool = False) -> DenseTensor:
    """Model values in unobserved cells; observed cells as given unless ``pure_model``."""
    reconstruction = cp_reconstruct(model)
    if pure_model:
        return reconstruction
    observed_mask = observation_mask(mask, observed.shape)
    return np.where(observed_mask == 1.0, sparse_to_dense(observed), reconstruction)
