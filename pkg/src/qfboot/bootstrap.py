"""Multiplier-bootstrap distribution of the quadratic-form statistic.

Replicate b multiplies each observation by an iid mean-0 variance-1 weight
drawn from substream b of the supplied RNG state, so results are reproducible
bit-for-bit regardless of execution order. Quantiles use the inf-definition
(ceil(alpha * B)-th order statistic, no interpolation) and p-values carry the
+1/(B+1) finite-sample correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .stats import Sample, _values
from .weights import RngState, weight_stream

DEFAULT_LEVELS = (0.900, 0.950, 0.975, 0.990)


@dataclass(frozen=True)
class QuantileGrid:
    """Strictly increasing probability levels in (0, 1)."""

    levels: tuple[float, ...] = DEFAULT_LEVELS

    def __post_init__(self) -> None:
        lv = tuple(float(a) for a in self.levels)
        if not lv:
            raise ValueError("levels must be nonempty")
        if any(not (0.0 < a < 1.0) for a in lv):
            raise ValueError(f"levels must lie in (0, 1): got {lv}")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError(f"levels must be strictly increasing: got {lv}")
        object.__setattr__(self, "levels", lv)

    def __iter__(self):
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)


def as_grid(levels: Sequence[float] | QuantileGrid | None) -> QuantileGrid:
    if levels is None:
        return QuantileGrid()
    if isinstance(levels, QuantileGrid):
        return levels
    return QuantileGrid(tuple(levels))


@dataclass(frozen=True)
class BootstrapDistribution:
    """Sorted replicate values of the bootstrapped statistic."""

    replicates: np.ndarray
    scheme: str
    seed_record: RngState

    def __post_init__(self) -> None:
        r = np.asarray(self.replicates, dtype=np.float64)
        if r.ndim != 1 or r.size < 1:
            raise ValueError("replicates must be a nonempty 1-d array")
        if not np.isfinite(r).all() or (r < 0).any():
            raise ValueError("replicates must be finite and >= 0")
        r = np.sort(r)
        r.flags.writeable = False
        object.__setattr__(self, "replicates", r)

    @property
    def n_replicates(self) -> int:
        return self.replicates.size


def bootstrap_distribution(
    sample: Sample | np.ndarray,
    scheme: str,
    n_replicates: int,
    rng: RngState,
    block: int = 512,
) -> BootstrapDistribution:
    """Bootstrap the quadratic-form statistic of ``sample``.

    Replicate b (1-based) uses the weights of ``rng.with_substream(b)``.
    Weight rows are stacked into blocks of ``block`` replicates so the
    statistic evaluation is a single matrix product per block.
    """
    z = _values(sample)
    if n_replicates < 1:
        raise ValueError(f"n_replicates must be >= 1: got {n_replicates}")
    n = z.shape[0]
    out = np.empty(n_replicates)
    stream = weight_stream(scheme, n, rng, n_replicates)
    wbuf = np.empty((min(block, n_replicates), n))
    done = 0
    while done < n_replicates:
        k = min(block, n_replicates - done)
        for i in range(k):
            wbuf[i] = next(stream)
        s = wbuf[:k] @ z
        out[done : done + k] = (s * s).sum(axis=1) / n
        done += k
    return BootstrapDistribution(replicates=out, scheme=scheme, seed_record=rng)


def bootstrap_quantile(dist: BootstrapDistribution, alpha: float) -> float:
    """ceil(alpha * B)-th order statistic of the sorted replicates."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1): got {alpha}")
    b = dist.n_replicates
    # tolerance guards alpha*B values that land on an integer up to float slop
    idx = math.ceil(alpha * b - 1e-9)
    idx = min(max(idx, 1), b)
    return float(dist.replicates[idx - 1])


def bootstrap_pvalue(dist: BootstrapDistribution, observed: float) -> float:
    """(1 + #{replicates >= observed}) / (B + 1); never exactly 0."""
    if not np.isfinite(observed):
        raise ValueError(f"observed must be finite: got {observed}")
    b = dist.n_replicates
    count = b - int(np.searchsorted(dist.replicates, observed, side="left"))
    return (1 + count) / (b + 1)


def coverage_discrepancy(
    mc_stats: np.ndarray,
    quantiles: np.ndarray,
    levels: Sequence[float] | QuantileGrid | None = None,
) -> float:
    """max over levels a of |empirical P(stat >= quantile_a) - (1 - a)|.

    ``quantiles`` holds one row per Monte Carlo replication, one column per
    level, aligned with ``mc_stats``.
    """
    grid = as_grid(levels)
    stats_arr = np.asarray(mc_stats, dtype=np.float64)
    q = np.asarray(quantiles, dtype=np.float64)
    if stats_arr.ndim != 1 or q.shape != (stats_arr.size, len(grid)):
        raise DimensionError(
            f"expected stats (R,) and quantiles (R, {len(grid)}): "
            f"got {stats_arr.shape} and {q.shape}"
        )
    rates = (stats_arr[:, None] >= q).mean(axis=0)
    targets = 1.0 - np.asarray(grid.levels)
    return float(np.abs(rates - targets).max())
