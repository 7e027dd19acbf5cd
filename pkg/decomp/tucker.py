# decomp/tucker.py
"""Tucker decomposition: HOSVD and its iterative refinement HOOI."""
import logging
from typing import Optional, Sequence, Tuple

from decomp.models import CpModel, FitReport, TuckerModel, relative_error
from exceptions import DataError
from linalg.kernels import leading_left_singular_vectors
from tensor_core.ops import multi_mode_product, unfold
from tensor_core.tensor import DenseTensor, as_dense

logger = logging.getLogger(__name__)


def _check_ranks(shape: Sequence[int], ranks: Sequence[int]) -> Tuple[int, ...]:
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(shape):
        raise DataError(f"Need {len(shape)} multilinear ranks, got {len(ranks)}.")
    for mode, (rank, extent) in enumerate(zip(ranks, shape), start=1):
        if not 1 <= rank <= extent:
            raise DataError(f"Rank {rank} for mode {mode} is outside 1..{extent}.")
    return ranks


def tucker_reconstruct(model: TuckerModel) -> DenseTensor:
    return multi_mode_product(model.core, model.factors)


def hosvd(tensor, ranks: Sequence[int]) -> TuckerModel:
    tensor = as_dense(tensor)
    ranks = _check_ranks(tensor.shape, ranks)
    factors = tuple(
        leading_left_singular_vectors(unfold(tensor, mode), rank)
        for mode, rank in enumerate(ranks, start=1)
    )
    core = multi_mode_product(tensor, factors, transpose=True)
    return TuckerModel(core=core, factors=factors)


def hooi(
    tensor,
    ranks: Sequence[int],
    *,
    max_iters: int = 500,
    tol: float = 1e-8,
    seed: Optional[int] = None,
) -> Tuple[TuckerModel, FitReport]:
    """Alternate each factor against the others' projection, starting from HOSVD.

    ``seed`` is accepted for a uniform options surface; the iteration is deterministic.
    """
    tensor = as_dense(tensor)
    model = hosvd(tensor, ranks)
    factors = list(model.factors)
    report = FitReport(method="hooi")
    previous = relative_error(tensor, tucker_reconstruct(model))
    logger.info(f"hooi: ranks {model.ranks} on shape {tensor.shape}, HOSVD error {previous:.3e}")
    for iteration in range(1, max_iters + 1):
        for n in range(tensor.ndim):
            others = [None if k == n else factors[k] for k in range(tensor.ndim)]
            projected = multi_mode_product(tensor, others, transpose=True)
            factors[n] = leading_left_singular_vectors(unfold(projected, n + 1), model.ranks[n])
        core = multi_mode_product(tensor, factors, transpose=True)
        candidate = TuckerModel(core=core, factors=tuple(factors))
        error = relative_error(tensor, tucker_reconstruct(candidate))
        report.iterations = iteration
        if error > previous:
            # Rounding noise only; keep the better iterate.
            report.errors.append(previous)
            report.converged = True
            break
        model = candidate
        report.errors.append(error)
        logger.debug(f"hooi iteration {iteration}: relative error {error:.3e}")
        if previous - error < tol:
            report.converged = True
            break
        previous = error
    if not report.converged:
        logger.warning(f"hooi did not converge in {max_iters} iterations")
    return model, report


def cp_to_tucker(model: CpModel) -> TuckerModel:
    """The same tensor as a Tucker model with a superdiagonal core."""
    return TuckerModel(core=model.diagonal_core(), factors=model.factors)
