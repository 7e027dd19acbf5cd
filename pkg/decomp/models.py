# decomp/models.py
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from exceptions import DataError
from tensor_core.ops import frobenius_norm
from tensor_core.tensor import DenseTensor, Matrix, Shape


# --- Pydantic Schemas ---
class FitReport(BaseModel):
    method: str
    errors: List[float] = Field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    truncation_errors: List[float] = Field(default_factory=list)

    @property
    def final_error(self) -> Optional[float]:
        return self.errors[-1] if self.errors else None


# --- Model containers ---
@dataclass(frozen=True)
class CpModel:
    """Weights (nonincreasing, >= 0) and unit-norm factor columns."""

    weights: np.ndarray
    factors: Tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if any(f.ndim != 2 or f.shape[1] != self.weights.size for f in self.factors):
            raise DataError("Every CP factor needs one column per weight.")

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def shape(self) -> Shape:
        return tuple(f.shape[0] for f in self.factors)

    def diagonal_core(self) -> DenseTensor:
        """The derived superdiagonal core: Lambda[r, ..., r] = weights[r]."""
        core = np.zeros((self.rank,) * len(self.factors))
        core[(np.arange(self.rank),) * len(self.factors)] = self.weights
        return core


@dataclass(frozen=True)
class TuckerModel:
    core: DenseTensor
    factors: Tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.core.shape != tuple(f.shape[1] for f in self.factors):
            raise DataError("Tucker core shape must match the factor column counts.")

    @property
    def ranks(self) -> Shape:
        return self.core.shape

    @property
    def shape(self) -> Shape:
        return tuple(f.shape[0] for f in self.factors)


@dataclass(frozen=True)
class TtModel:
    """Cores of shape ``(r_{n-1}, I_n, r_n)`` with ``r_0 = r_N = 1``."""

    cores: Tuple[DenseTensor, ...]

    def __post_init__(self):
        cores = tuple(self.cores)
        object.__setattr__(self, "cores", cores)
        if not cores or cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
            raise DataError("TT boundary ranks must be 1.")
        for left, right in zip(cores, cores[1:]):
            if left.shape[-1] != right.shape[0]:
                raise DataError(f"TT rank mismatch between cores {left.shape} and {right.shape}.")

    @property
    def ranks(self) -> Shape:
        return (1,) + tuple(core.shape[-1] for core in self.cores)

    @property
    def shape(self) -> Shape:
        return tuple(core.shape[1] for core in self.cores)


def relative_error(tensor, reconstruction) -> float:
    tensor = np.asarray(tensor, dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if tensor.shape != reconstruction.shape:
        raise DataError(f"Shape mismatch: {tensor.shape} vs {reconstruction.shape}.")
    norm = frobenius_norm(tensor)
    if norm == 0.0:
        raise DataError("Relative error is undefined for an all-zero tensor.")
    return frobenius_norm(tensor - reconstruction) / norm
