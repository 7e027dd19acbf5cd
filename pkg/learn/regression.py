# learn/regression.py
"""Scalar-on-tensor regression with CP- or Tucker-structured coefficients.

The model is ``y = <X, B> + w.z + noise``. Holding all but one block fixed the
model is linear in that block, so each fit alternates ridge solves over the
blocks, and the penalized training objective never increases.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from decomp.cp import cp_reconstruct
from decomp.model_io import read_container, write_container
from decomp.models import CpModel, FitReport, TuckerModel
from decomp.tucker import tucker_reconstruct
from exceptions import DataError
from linalg.kernels import solve_ridge
from settings import get_default_seed
from tensor_core.ops import inner_product, unfold, unfolding_khatri_rao
from tensor_core.tensor import DenseTensor, Matrix, Shape, as_dense
from tensor_core.tensor_io import format_scalar, format_shape, parse_shape

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegressionSample:
    x: DenseTensor
    z: np.ndarray
    y: float


@dataclass(frozen=True)
class CpRegressionModel:
    factors: Tuple[Matrix, ...]
    covariate_weights: np.ndarray
    residual_scale: float

    @property
    def shape(self) -> Shape:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def coefficient(self) -> DenseTensor:
        return cp_reconstruct(CpModel(weights=np.ones(self.rank), factors=self.factors))


@dataclass(frozen=True)
class TuckerRegressionModel:
    core: DenseTensor
    factors: Tuple[Matrix, ...]
    covariate_weights: np.ndarray
    residual_scale: float

    @property
    def shape(self) -> Shape:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def ranks(self) -> Shape:
        return self.core.shape

    @property
    def coefficient(self) -> DenseTensor:
        return tucker_reconstruct(TuckerModel(core=self.core, factors=self.factors))


RegressionModel = Union[CpRegressionModel, TuckerRegressionModel]


def stack_samples(samples: Sequence[RegressionSample]) -> Tuple[np.ndarray, Matrix, np.ndarray]:
    """Samples to a ``(M, I1..IN)`` batch, an ``(M, c)`` covariate matrix and responses."""
    if not samples:
        raise DataError("Regression needs at least one sample.")
    shape = as_dense(samples[0].x).shape
    n_covariates = np.asarray(samples[0].z, dtype=np.float64).size
    for k, sample in enumerate(samples):
        if np.shape(sample.x) != shape:
            raise DataError(f"Sample {k} has tensor shape {np.shape(sample.x)}, expected {shape}.")
        if np.size(sample.z) != n_covariates:
            raise DataError(f"Sample {k} has {np.size(sample.z)} covariates, expected {n_covariates}.")
    x = np.stack([as_dense(s.x) for s in samples])
    z = np.array([np.asarray(s.z, dtype=np.float64).ravel() for s in samples]).reshape(len(samples), n_covariates)
    y = np.array([float(s.y) for s in samples])
    return x, z, y


def _batch_unfold(batch: np.ndarray, axis: int) -> np.ndarray:
    """Per-sample mode unfolding of a ``(M, I1..IN)`` batch, as ``(M, I_axis, rest)``."""
    moved = np.moveaxis(batch, axis + 1, 1)
    return np.reshape(moved, moved.shape[:2] + (-1,), order="F")


def _batch_project(batch: np.ndarray, factors: Sequence[Matrix], skip: Optional[int] = None) -> np.ndarray:
    """Multiply every sample by ``factor.T`` along each mode except ``skip``."""
    for axis, factor in enumerate(factors):
        if axis == skip:
            continue
        batch = np.moveaxis(np.tensordot(batch, factor, axes=([axis + 1], [0])), -1, axis + 1)
    return batch


def _objective(y, predictions, lam, blocks) -> float:
    penalty = lam * sum(float(np.sum(b ** 2)) for b in blocks)
    return (float(np.sum((y - predictions) ** 2)) + penalty) / y.size


def _solve_block(design: Matrix, z: Matrix, y: np.ndarray, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    coefficients = solve_ridge(np.hstack([design, z]), y, lam)
    split = design.shape[1]
    return coefficients[:split], coefficients[split:]


def _finish(report: FitReport, residuals: np.ndarray) -> float:
    if not report.converged:
        logger.warning(f"{report.method} did not converge in {report.iterations} sweeps")
    return float(np.sqrt(np.mean(residuals ** 2)))


def _converged(report: FitReport, tol: float, scale: float) -> bool:
    """Stop once a sweep lowers the objective by less than ``tol`` relative to ``max(previous, scale)``.

    ``scale`` is the mean squared response, the objective of the all-zero model.
    """
    if report.errors[-1] <= 1e-30:
        return True
    if len(report.errors) < 2:
        return False
    previous = report.errors[-2]
    return previous - report.errors[-1] < tol * max(previous, scale, 1e-300)


def cp_regression_fit(
    samples: Sequence[RegressionSample],
    rank: int,
    lam: float = 1e-6,
    *,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
) -> Tuple[CpRegressionModel, FitReport]:
    if rank < 1:
        raise DataError(f"Regression rank must be >= 1, got {rank}.")
    x, z, y = stack_samples(samples)
    shape = x.shape[1:]
    rng = np.random.default_rng(get_default_seed() if seed is None else seed)
    factors = [rng.standard_normal((extent, rank)) for extent in shape]
    weights = np.zeros(z.shape[1])
    report = FitReport(method="cp_regression")
    logger.info(f"cp_regression_fit: rank {rank}, {y.size} samples of shape {shape}")

    for iteration in range(1, max_iters + 1):
        for n, extent in enumerate(shape):
            if len(shape) == 1:
                khatri = np.ones((1, rank))
            else:
                khatri = unfolding_khatri_rao(factors, n + 1)
            design = (_batch_unfold(x, n) @ khatri).reshape(y.size, extent * rank)
            block, weights = _solve_block(design, z, y, lam)
            factors[n] = block.reshape(extent, rank)
        predictions = design @ block + z @ weights
        report.errors.append(_objective(y, predictions, lam, [*factors, weights]))
        report.iterations = iteration
        logger.debug(f"cp_regression iteration {iteration}: objective {report.errors[-1]:.3e}")
        if _converged(report, tol, float(np.mean(y ** 2))):
            report.converged = True
            break

    scale = _finish(report, y - predictions)
    return CpRegressionModel(factors=tuple(factors), covariate_weights=weights, residual_scale=scale), report


def tucker_regression_fit(
    samples: Sequence[RegressionSample],
    ranks: Sequence[int],
    lam: float = 1e-6,
    *,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
) -> Tuple[TuckerRegressionModel, FitReport]:
    x, z, y = stack_samples(samples)
    shape = x.shape[1:]
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(shape):
        raise DataError(f"Need {len(shape)} ranks, got {len(ranks)}.")
    for mode, (rank, extent) in enumerate(zip(ranks, shape), start=1):
        if not 1 <= rank <= extent:
            raise DataError(f"Rank {rank} for mode {mode} is outside 1..{extent}.")
    rng = np.random.default_rng(get_default_seed() if seed is None else seed)
    factors = [rng.standard_normal((extent, rank)) for extent, rank in zip(shape, ranks)]
    core = np.zeros(ranks)
    weights = np.zeros(z.shape[1])
    report = FitReport(method="tucker_regression")
    logger.info(f"tucker_regression_fit: ranks {ranks}, {y.size} samples of shape {shape}")

    for iteration in range(1, max_iters + 1):
        design = _batch_project(x, factors).reshape(y.size, -1)
        block, weights = _solve_block(design, z, y, lam)
        core = block.reshape(ranks)
        for n, extent in enumerate(shape):
            projected = _batch_unfold(_batch_project(x, factors, skip=n), n)
            design = (projected @ unfold(core, n + 1).T).reshape(y.size, extent * ranks[n])
            block, weights = _solve_block(design, z, y, lam)
            factors[n] = block.reshape(extent, ranks[n])
        predictions = design @ block + z @ weights
        report.errors.append(_objective(y, predictions, lam, [core, *factors, weights]))
        report.iterations = iteration
        logger.debug(f"tucker_regression iteration {iteration}: objective {report.errors[-1]:.3e}")
        if _converged(report, tol, float(np.mean(y ** 2))):
            report.converged = True
            break

    scale = _finish(report, y - predictions)
    model = TuckerRegressionModel(core=core, factors=tuple(factors), covariate_weights=weights, residual_scale=scale)
    return model, report


def regress_predict(model: RegressionModel, x, z) -> float:
    """``<x, B> + w.z``; the noise term is not part of a prediction."""
    x = as_dense(x)
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != model.shape:
        raise DataError(f"Tensor shape {x.shape} does not match the model shape {model.shape}.")
    if z.size != model.covariate_weights.size:
        raise DataError(f"Expected {model.covariate_weights.size} covariates, got {z.size}.")
    return inner_product(x, model.coefficient) + float(np.dot(model.covariate_weights, z))


def predict_many(model: RegressionModel, samples: Sequence[RegressionSample]) -> List[float]:
    return [regress_predict(model, s.x, s.z) for s in samples]


def write_regression_model(path, model: RegressionModel) -> None:
    header = {"shape": format_shape(model.shape), "residual_scale": format_scalar(model.residual_scale)}
    factor_blocks = [(f"factor {n}", factor) for n, factor in enumerate(model.factors, start=1)]
    weights = [("covariate_weights", model.covariate_weights)] if model.covariate_weights.size else []
    if isinstance(model, CpRegressionModel):
        header["ranks"] = str(model.rank)
        write_container(path, "cp-regression", header, [*factor_blocks, *weights])
    else:
        header["ranks"] = format_shape(model.ranks)
        write_container(path, "tucker-regression", header, [("core", model.core), *factor_blocks, *weights])


def read_regression_model(path) -> RegressionModel:
    kind, header, blocks = read_container(path)
    try:
        n_modes = len(parse_shape(header["shape"]))
        factors = tuple(blocks[f"factor {n}"] for n in range(1, n_modes + 1))
        weights = blocks.get("covariate_weights", np.zeros(0))
        scale = float(header["residual_scale"])
        if kind == "cp-regression":
            return CpRegressionModel(factors=factors, covariate_weights=weights, residual_scale=scale)
        if kind == "tucker-regression":
            return TuckerRegressionModel(core=blocks["core"], factors=factors, covariate_weights=weights, residual_scale=scale)
    except KeyError as e:
        raise DataError(f"{path}: missing {e.args[0]!r}.")
    raise DataError(f"{path}: expected a regression model, got kind {kind!r}.")
