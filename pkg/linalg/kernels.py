# linalg/kernels.py
"""Matrix kernels shared by the decompositions and the regression solvers.

Sign convention: each left singular vector / eigenvector is flipped so its
largest-magnitude entry is nonnegative, which makes results reproducible.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from exceptions import DataError
from tensor_core.tensor import Matrix, as_dense

logger = logging.getLogger(__name__)

PINV_RELATIVE_CUTOFF = 1e-12
SYMMETRY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SvdResult:
    U: Matrix
    S: np.ndarray
    V: Matrix


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: Matrix


@dataclass(frozen=True)
class PcaResult:
    projection: Matrix
    scores: Matrix
    mean: np.ndarray
    variances: np.ndarray


def _as_matrix(a) -> Matrix:
    a = as_dense(a)
    if a.ndim != 2 or a.size == 0:
        raise DataError(f"Expected a nonempty matrix, got shape {a.shape}.")
    return a


def _column_signs(u: Matrix) -> np.ndarray:
    if u.shape[0] == 0:
        return np.ones(u.shape[1])
    pivots = u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])]
    return np.where(pivots < 0, -1.0, 1.0)


def svd(a) -> SvdResult:
    """Thin SVD with k = min(m, n) and singular values in nonincreasing order."""
    a = _as_matrix(a)
    u, s, vt = sla.svd(a, full_matrices=False, lapack_driver="gesdd")
    signs = _column_signs(u)
    return SvdResult(U=u * signs, S=s, V=vt.T * signs)


def truncated_svd(a, r: int) -> SvdResult:
    a = _as_matrix(a)
    if not 1 <= r <= min(a.shape):
        raise DataError(f"Truncation rank {r} is outside 1..{min(a.shape)}.")
    full = svd(a)
    return SvdResult(U=full.U[:, :r], S=full.S[:r], V=full.V[:, :r])


def leading_left_singular_vectors(a, r: int) -> Matrix:
    """Top-r left singular vectors, completed to an orthonormal set when r exceeds the column count."""
    a = _as_matrix(a)
    if not 1 <= r <= a.shape[0]:
        raise DataError(f"Rank {r} is outside 1..{a.shape[0]}.")
    if r <= min(a.shape):
        return truncated_svd(a, r).U
    u, _, _ = sla.svd(a, full_matrices=True)
    u = u[:, :r]
    return u * _column_signs(u)


def eigh_sym(s) -> EigResult:
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise DataError(f"eigh_sym needs a square matrix, got {s.shape}.")
    scale = max(1.0, float(np.max(np.abs(s))))
    if np.max(np.abs(s - s.T)) > SYMMETRY_TOLERANCE * scale:
        raise DataError("eigh_sym needs a symmetric matrix.")
    values, vectors = sla.eigh((s + s.T) / 2)
    order = np.argsort(values)[::-1]
    vectors = vectors[:, order]
    return EigResult(eigenvalues=values[order], eigenvectors=vectors * _column_signs(vectors))


def pca(x, p: int) -> PcaResult:
    """Principal components of an observations-by-features matrix (centered, not scaled)."""
    x = _as_matrix(x)
    n_obs, n_features = x.shape
    if n_obs < 2:
        raise DataError("PCA needs at least 2 observations.")
    if not 1 <= p <= n_features:
        raise DataError(f"Component count {p} is outside 1..{n_features}.")
    mean = x.mean(axis=0)
    centered = x - mean
    eig = eigh_sym(centered.T @ centered)
    projection = eig.eigenvectors[:, :p]
    scores = centered @ projection
    return PcaResult(
        projection=projection,
        scores=scores,
        mean=mean,
        variances=np.maximum(eig.eigenvalues[:p], 0.0) / n_obs,
    )


def pinv_cutoff(shape, largest: float) -> float:
    return max(shape) * largest * PINV_RELATIVE_CUTOFF


def solve_ridge(a, b, lam: float = 0.0) -> Matrix:
    """argmin_X ||aX - b||_F^2 + lam ||X||_F^2, minimum-norm when lam = 0."""
    a = _as_matrix(a)
    b = as_dense(b)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    if b.shape[0] != a.shape[0]:
        raise DataError(f"Row mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}.")
    if lam < 0:
        raise DataError("Ridge penalty must be >= 0.")
    u, s, vt = sla.svd(a, full_matrices=False, lapack_driver="gesdd")
    if lam == 0.0:
        cutoff = pinv_cutoff(a.shape, s[0] if s.size else 0.0)
        keep = s > cutoff
        if not keep.all():
            logger.debug(f"solve_ridge: dropping {int((~keep).sum())} singular values below {cutoff:.3g}")
        gain = np.zeros_like(s)
        gain[keep] = 1.0 / s[keep]
    else:
        gain = s / (s ** 2 + lam)
    x = vt.T @ (gain[:, None] * (u.T @ b))
    return x[:, 0] if vector_rhs else x
