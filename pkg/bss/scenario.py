# bss/scenario.py
"""Synthetic mixtures for the source-separation comparison."""
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from exceptions import DataError
from tensor_core.tensor import Matrix

logger = logging.getLogger(__name__)

SourceKind = Literal["sinusoid", "damped-exponential"]


# --- Pydantic Schemas ---
class ScenarioSpec(BaseModel):
    n_sources: int = Field(2, ge=1)
    n_channels: int = Field(3, ge=1)
    n_samples: int = Field(400, ge=2)
    frequencies: List[float] = Field(default_factory=lambda: [0.3, 0.8])
    kinds: List[SourceKind] = Field(default_factory=lambda: ["sinusoid"])
    damping: float = Field(0.005, ge=0.0)
    noise: float = Field(0.0, ge=0.0)
    seed: int = 42
    mixing: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def _check_sources(self):
        if len(self.frequencies) != self.n_sources:
            raise ValueError(f"Need {self.n_sources} frequencies, got {len(self.frequencies)}.")
        if any(f <= 0 for f in self.frequencies):
            raise ValueError("Frequencies must be positive.")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ValueError("Frequencies must be distinct.")
        if len(self.kinds) not in (1, self.n_sources):
            raise ValueError(f"Give one source kind or {self.n_sources}, got {len(self.kinds)}.")
        return self


# --- Containers ---
@dataclass(frozen=True)
class BssScenario:
    sources: Matrix
    mixing: Matrix
    mixtures: Matrix
    noise: float
    seed: int

    @property
    def n_sources(self) -> int:
        return self.sources.shape[0]

    @property
    def n_channels(self) -> int:
        return self.mixtures.shape[0]


def _source(kind: SourceKind, frequency: float, damping: float, t: np.ndarray) -> np.ndarray:
    if kind == "sinusoid":
        signal = np.sin(frequency * t)
    else:
        signal = np.exp(-damping * t) * np.cos(frequency * t)
    return signal / np.sqrt(np.mean(signal ** 2))


def generate_scenario(spec: ScenarioSpec) -> BssScenario:
    """Unit-power sources mixed by a seeded (or given) full-column-rank matrix."""
    if spec.n_channels < spec.n_sources:
        raise DataError(f"Need at least as many channels as sources, got C={spec.n_channels} < K={spec.n_sources}.")
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.n_samples, dtype=np.float64)
    kinds = spec.kinds * spec.n_sources if len(spec.kinds) == 1 else spec.kinds
    sources = np.array([_source(kind, f, spec.damping, t) for kind, f in zip(kinds, spec.frequencies)])

    if spec.mixing is None:
        mixing = rng.standard_normal((spec.n_channels, spec.n_sources))
    else:
        mixing = np.asarray(spec.mixing, dtype=np.float64)
        if mixing.shape != (spec.n_channels, spec.n_sources):
            raise DataError(f"Mixing matrix must be {spec.n_channels}x{spec.n_sources}, got {mixing.shape}.")
    if np.linalg.matrix_rank(mixing) < spec.n_sources:
        raise DataError("Mixing matrix does not have full column rank.")

    mixtures = mixing @ sources
    if spec.noise > 0:
        mixtures = mixtures + spec.noise * rng.standard_normal(mixtures.shape)
    logger.info(f"generate_scenario: K={spec.n_sources}, C={spec.n_channels}, T={spec.n_samples}, seed {spec.seed}")
    return BssScenario(sources=sources, mixing=mixing, mixtures=mixtures, noise=spec.noise, seed=spec.seed)
