# bss/methods.py
"""Source-separation methods compared by the harness: PCA, FastICA and the Hankel-tensor CP method.

Every method takes mixtures as a ``C x T`` matrix and returns ``K`` source
estimates. When the true sources are passed as ``reference`` the result also
carries the aligned per-source |correlation|.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from decomp.cp import cp_als
from exceptions import DataError
from linalg.kernels import eigh_sym, pca, svd
from settings import get_default_seed
from tensor_core.tensor import Matrix, as_dense
from tensorize.hankel import dehankelize, hankelize_channels

logger = logging.getLogger(__name__)

FASTICA_MAX_ITERS = 200
FASTICA_TOL = 1e-8


@dataclass(frozen=True)
class BssResult:
    method: str
    sources: Matrix
    residual: float
    correlations: Tuple[float, ...] = ()
    converged: bool = True
    reconstruction: Optional[Matrix] = field(default=None, repr=False)

    @property
    def mean_correlation(self) -> Optional[float]:
        return float(np.mean(self.correlations)) if self.correlations else None


def _check_mixtures(x, n_sources: int) -> Matrix:
    x = as_dense(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 2:
        raise DataError(f"Expected a channels-by-samples matrix, got shape {x.shape}.")
    if not 1 <= n_sources <= x.shape[0]:
        raise DataError(f"Cannot extract {n_sources} sources from {x.shape[0]} channels.")
    return x


def _residual(x: Matrix, reconstruction: Matrix) -> float:
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise DataError("Mixtures are all zero.")
    return float(np.linalg.norm(x - reconstruction)) / norm


def _abs_correlations(truth: Matrix, estimate: Matrix) -> np.ndarray:
    """|Pearson correlation| between every true row and every estimated row."""
    def standardize(rows):
        centered = rows - rows.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(centered, axis=1, keepdims=True)
        return np.divide(centered, norms, out=np.zeros_like(centered), where=norms > 0)

    return np.clip(np.abs(standardize(truth) @ standardize(estimate).T), 0.0, 1.0)


def best_assignment(truth, estimate) -> Tuple[Tuple[int, ...], np.ndarray, np.ndarray]:
    """Permutation (estimate row per true row), signs and |correlations| maximizing the total |correlation|."""
    truth = as_dense(truth)
    estimate = as_dense(estimate)
    if truth.shape != estimate.shape:
        raise DataError(f"True sources {truth.shape} and estimates {estimate.shape} differ in shape.")
    scores = _abs_correlations(truth, estimate)
    k = truth.shape[0]
    permutation = max(itertools.permutations(range(k)), key=lambda p: scores[np.arange(k), list(p)].sum())
    chosen = estimate[list(permutation)]
    signed = np.sum((truth - truth.mean(axis=1, keepdims=True)) * (chosen - chosen.mean(axis=1, keepdims=True)), axis=1)
    signs = np.where(signed < 0, -1.0, 1.0)
    return permutation, signs, scores[np.arange(k), list(permutation)]


def align_sources(truth, estimate) -> Tuple[float, ...]:
    """Per-true-source |correlation| after the best sign and permutation match."""
    _, _, correlations = best_assignment(truth, estimate)
    return tuple(float(c) for c in correlations)


def _with_reference(result: BssResult, reference) -> BssResult:
    if reference is None:
        return result
    return replace(result, correlations=align_sources(reference, result.sources))


def bss_pca(x, n_sources: int, reference=None) -> BssResult:
    """Scores of the top principal directions, treating samples as observations."""
    x = _check_mixtures(x, n_sources)
    fit = pca(x.T, n_sources)
    reconstruction = (fit.scores @ fit.projection.T + fit.mean).T
    result = BssResult(
        method="pca",
        sources=fit.scores.T.copy(),
        residual=_residual(x, reconstruction),
        reconstruction=reconstruction,
    )
    return _with_reference(result, reference)


def _symmetric_decorrelation(w: Matrix) -> Matrix:
    """``(W W^T)^(-1/2) W``."""
    eig = eigh_sym(w @ w.T)
    values = np.maximum(eig.eigenvalues, np.finfo(float).tiny)
    return eig.eigenvectors @ np.diag(1.0 / np.sqrt(values)) @ eig.eigenvectors.T @ w


def bss_fastica(
    x,
    n_sources: int,
    *,
    max_iters: int = FASTICA_MAX_ITERS,
    tol: float = FASTICA_TOL,
    seed: Optional[int] = None,
    reference=None,
) -> BssResult:
    """Symmetric FastICA with the tanh contrast on whitened mixtures.

    Gaussian sources are not identifiable; the result is still returned but
    its correlations carry no guarantee.
    """
    x = _check_mixtures(x, n_sources)
    n_samples = x.shape[1]
    mean = x.mean(axis=1, keepdims=True)
    centered = x - mean
    eig = eigh_sym(centered @ centered.T / n_samples)
    variances = eig.eigenvalues[:n_sources]
    if np.any(variances <= 0):
        raise DataError("Mixtures have fewer than K directions with positive variance.")
    basis = eig.eigenvectors[:, :n_sources]
    whitened = (basis / np.sqrt(variances)).T @ centered

    rng = np.random.default_rng(get_default_seed() if seed is None else seed)
    w = _symmetric_decorrelation(rng.standard_normal((n_sources, n_sources)))
    converged = False
    for iteration in range(1, max_iters + 1):
        projected = np.tanh(w @ whitened)
        derivative = 1.0 - projected ** 2
        updated = projected @ whitened.T / n_samples - derivative.mean(axis=1)[:, None] * w
        updated = _symmetric_decorrelation(updated)
        change = float(np.max(np.abs(np.abs(np.sum(updated * w, axis=1)) - 1.0)))
        w = updated
        logger.debug(f"fastica iteration {iteration}: direction change {change:.3e}")
        if change < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"fastica did not converge in {max_iters} iterations")

    sources = w @ whitened
    reconstruction = (basis * np.sqrt(variances)) @ w.T @ sources + mean
    result = BssResult(
        method="fastica",
        sources=sources,
        residual=_residual(x, reconstruction),
        converged=converged,
        reconstruction=reconstruction,
    )
    return _with_reference(result, reference)


def dominant_frequency(signal) -> float:
    """Peak of the magnitude spectrum in rad/sample, ignoring the mean."""
    signal = as_dense(signal).ravel()
    spectrum = np.abs(np.fft.rfft(signal - signal.mean()))
    spectrum[0] = 0.0
    return 2.0 * np.pi * int(np.argmax(spectrum)) / signal.size


def bss_multiway(
    x,
    n_sources: int,
    window: Optional[int] = None,
    rank: Optional[int] = None,
    *,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
    restarts: int = 3,
    reference=None,
) -> BssResult:
    """CP of the channel-stacked Hankel tensor, components grouped into sources by frequency.

    A real sinusoid spans a 2-dimensional Hankel subspace, so the default
    rank is ``2K``. Sorted by dominant frequency, the components are split
    into K consecutive groups; each group's per-channel contribution is
    dehankelized and its leading time profile is the source estimate.
    """
    x = _check_mixtures(x, n_sources)
    n_channels, n_samples = x.shape
    window = n_samples // 2 if window is None else window
    rank = 2 * n_sources if rank is None else rank
    if not n_sources <= min(window, n_samples - window + 1):
        raise DataError(f"Window {window} leaves fewer than {n_sources} Hankel rows or columns.")
    if rank < n_sources:
        raise DataError(f"CP rank {rank} is below the source count {n_sources}.")

    hankel = hankelize_channels(x, window)
    model, report = cp_als(hankel, rank, max_iters=max_iters, tol=tol, seed=seed, restarts=restarts)
    a, b, c = model.factors

    component_signals = [dehankelize(model.weights[r] * np.outer(a[:, r], b[:, r])) for r in range(rank)]
    frequencies = np.array([dominant_frequency(s) for s in component_signals])
    groups = np.array_split(np.argsort(frequencies, kind="stable"), n_sources)
    logger.info(f"bss_multiway: component frequencies {np.round(frequencies, 4).tolist()}")

    sources = np.empty((n_sources, n_samples))
    reconstruction = np.zeros_like(x)
    for k, group in enumerate(groups):
        block = np.array([
            dehankelize(np.einsum("r,ir,jr->ij", model.weights[group] * c[channel, group], a[:, group], b[:, group]))
            for channel in range(n_channels)
        ])
        reconstruction += block
        profile = svd(block)
        sources[k] = profile.V[:, 0] * profile.S[0] / np.sqrt(n_samples)

    result = BssResult(
        method="multiway",
        sources=sources,
        residual=_residual(x, reconstruction),
        converged=report.converged,
        reconstruction=reconstruction,
    )
    return _with_reference(result, reference)
