# bss/harness.py
"""Runs the separation methods on one scenario and writes the comparison artifacts."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from bss.methods import BssResult, best_assignment, bss_fastica, bss_multiway, bss_pca
from bss.scenario import BssScenario
from exceptions import TensorKitError

logger = logging.getLogger(__name__)

MethodName = Literal["pca", "fastica", "multiway"]
METHODS = ("pca", "fastica", "multiway")
CSV_FLOAT_FORMAT = "%.17g"


class ComparisonRow(BaseModel):
    method: str
    residual: Optional[float] = None
    correlations: List[float] = []
    mean_correlation: Optional[float] = None
    converged: bool = False
    error: Optional[str] = None


@dataclass(frozen=True)
class Comparison:
    rows: List[ComparisonRow]
    results: Dict[str, BssResult]


def _run(method: str, scenario: BssScenario, window: Optional[int], rank: Optional[int], seed: int) -> BssResult:
    x, k, truth = scenario.mixtures, scenario.n_sources, scenario.sources
    if method == "pca":
        return bss_pca(x, k, reference=truth)
    if method == "fastica":
        return bss_fastica(x, k, seed=seed, reference=truth)
    if method == "multiway":
        return bss_multiway(x, k, window, rank, seed=seed, reference=truth)
    raise TensorKitError(f"Unknown separation method {method!r}.", exit_code=2)


def compare_methods(
    scenario: BssScenario,
    methods: Sequence[str] = METHODS,
    window: Optional[int] = None,
    rank: Optional[int] = None,
    seed: Optional[int] = None,
) -> Comparison:
    """One row per method; a failing method gets a row with its error instead of metrics."""
    seed = scenario.seed if seed is None else seed
    rows, results = [], {}
    for method in methods:
        try:
            result = _run(method, scenario, window, rank, seed)
        except (TensorKitError, np.linalg.LinAlgError) as e:
            detail = e.detail if isinstance(e, TensorKitError) else f"linear algebra failure: {e}"
            logger.warning(f"compare_methods: {method} failed: {detail}")
            rows.append(ComparisonRow(method=method, error=detail))
            continue
        results[method] = result
        rows.append(ComparisonRow(
            method=method,
            residual=result.residual,
            correlations=list(result.correlations),
            mean_correlation=result.mean_correlation,
            converged=result.converged,
        ))
        logger.info(f"compare_methods: {method} residual {result.residual:.3e}, mean |rho| {result.mean_correlation:.4f}")
    return Comparison(rows=rows, results=results)


def comparison_frame(rows: Sequence[ComparisonRow], n_sources: int) -> pd.DataFrame:
    columns = ["method", "residual", "mean_correlation", "converged", "error"]
    columns += [f"correlation_{k}" for k in range(1, n_sources + 1)]
    records = []
    for row in rows:
        record = row.model_dump(exclude={"correlations"})
        record.update({f"correlation_{k}": c for k, c in enumerate(row.correlations, start=1)})
        records.append(record)
    return pd.DataFrame(records, columns=columns)


def write_comparison_csv(path: Union[str, Path], rows: Sequence[ComparisonRow], n_sources: int) -> None:
    comparison_frame(rows, n_sources).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def signals_frame(scenario: BssScenario, results: Dict[str, BssResult]) -> pd.DataFrame:
    """Time, originals, mixtures and each method's estimates matched in order and sign to the originals."""
    columns = {"time": np.arange(scenario.sources.shape[1])}
    for k, source in enumerate(scenario.sources, start=1):
        columns[f"original_{k}"] = source
    for c, mixture in enumerate(scenario.mixtures, start=1):
        columns[f"mixed_{c}"] = mixture
    for method, result in results.items():
        permutation, signs, _ = best_assignment(scenario.sources, result.sources)
        for k, (row, sign) in enumerate(zip(permutation, signs), start=1):
            columns[f"{method}_estimate_{k}"] = sign * result.sources[row]
    return pd.DataFrame(columns)


def write_signals_csv(path: Union[str, Path], scenario: BssScenario, results: Dict[str, BssResult]) -> None:
    signals_frame(scenario, results).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
