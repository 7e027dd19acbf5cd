# learn/params.py
"""Parameter counts of vectorized, CP and Tucker regression models.

``raw`` counts stored scalars. ``effective`` subtracts the indeterminacies:
R(N-1) scalings for CP and sum(R_n^2) rotations for Tucker.
"""
import math
from typing import Literal, Sequence

from exceptions import DataError

ModelKind = Literal["cp", "tucker", "vectorized"]
CountMode = Literal["raw", "effective"]


def param_count(
    kind: ModelKind,
    dims: Sequence[int],
    ranks: Sequence[int] = (),
    n_covariates: int = 0,
    mode: CountMode = "raw",
) -> int:
    dims = [int(d) for d in dims]
    ranks = [int(r) for r in ranks]
    if not dims or any(d < 1 for d in dims):
        raise DataError(f"Invalid dims {dims}.")
    if n_covariates < 0:
        raise DataError("n_covariates must be >= 0.")
    if mode not in ("raw", "effective"):
        raise DataError(f"Unknown count mode {mode!r}.")
    n_modes = len(dims)

    if kind == "vectorized":
        return math.prod(dims) + n_covariates

    if kind == "cp":
        if len(ranks) != 1 or ranks[0] < 1:
            raise DataError("CP needs a single rank >= 1.")
        rank = ranks[0]
        count = rank * sum(dims)
        if mode == "effective":
            count -= rank * (n_modes - 1)
        return count + n_covariates

    if kind == "tucker":
        if len(ranks) != n_modes:
            raise DataError(f"Tucker needs {n_modes} ranks, got {len(ranks)}.")
        for mode_index, (rank, extent) in enumerate(zip(ranks, dims), start=1):
            if not 1 <= rank <= extent:
                raise DataError(f"Rank {rank} exceeds dimension {extent} at mode {mode_index}.")
        count = sum(d * r for d, r in zip(dims, ranks)) + math.prod(ranks)
        if mode == "effective":
            count -= sum(r * r for r in ranks)
        return count + n_covariates

    raise DataError(f"Unknown model kind {kind!r}.")
