"""Quadratic-form statistics and the dense symmetric linear algebra behind them.

The central object is an n x d sample of observations Z_i and the statistic
Q = n * ||mean(Z)||_2^2, together with its multiplier-weighted analog. The
sample second moment here is deliberately uncentered: all statistics in this
package assume mean-zero observations, and callers must center upstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, NotPSDError

SYM_RTOL = 1e-12
PSD_CLAMP_RTOL = 1e-10


@dataclass(frozen=True)
class Sample:
    """Immutable n x d array of observations, one row per observation."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"sample must be a nonempty 2-d array: got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("sample contains non-finite entries")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues descending, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _values(sample: Sample | np.ndarray) -> np.ndarray:
    if isinstance(sample, Sample):
        return sample.values
    return Sample(np.asarray(sample)).values


def check_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a finite square symmetric matrix; returns its symmetrized copy."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square: got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric to relative tolerance {SYM_RTOL}")
    return 0.5 * (a + a.T)


def quadratic_form_stat(sample: Sample | np.ndarray) -> float:
    """Q = n * ||mean of the rows||_2^2."""
    z = _values(sample)
    m = z.mean(axis=0)
    return float(z.shape[0] * (m @ m))


def weighted_quadratic_form_stat(sample: Sample | np.ndarray, w: np.ndarray) -> float:
    """Q* = n * ||n^-1 sum_i w_i Z_i||_2^2."""
    z = _values(sample)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (z.shape[0],):
        raise DimensionError(f"weights must have shape ({z.shape[0]},): got {w.shape}")
    s = w @ z
    return float((s @ s) / z.shape[0])


def sample_second_moment(sample: Sample | np.ndarray) -> np.ndarray:
    """Uncentered second moment n^-1 sum_i Z_i Z_i^T (d x d, PSD)."""
    z = _values(sample)
    m = (z.T @ z) / z.shape[0]
    return 0.5 * (m + m.T)


def sym_eigen(m: np.ndarray) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    a = check_symmetric(m)
    vals, vecs = np.linalg.eigh(a)
    return Spectrum(eigenvalues=vals[::-1].copy(), eigenvectors=vecs[:, ::-1].copy())


def matrix_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root S with S @ S = m.

    Eigenvalues in [-PSD_CLAMP_RTOL * lambda_max, 0) are treated as round-off
    and clamped to zero; anything more negative raises :class:`NotPSDError`.
    """
    spec = sym_eigen(m)
    vals = spec.eigenvalues
    lam_max = max(vals[0], 0.0)
    if vals[-1] < -PSD_CLAMP_RTOL * max(lam_max, 1e-300):
        raise NotPSDError(
            f"matrix has negative eigenvalue {vals[-1]:.3e} "
            f"(max eigenvalue {lam_max:.3e})"
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    s = (spec.eigenvectors * root) @ spec.eigenvectors.T
    return 0.5 * (s + s.T)


def trace_power(m: np.ndarray, k: int) -> float:
    """tr(m^k) for k in {1, 2, 3}."""
    a = check_symmetric(m)
    if k == 1:
        return float(np.trace(a))
    if k == 2:
        return float((a * a).sum())
    if k == 3:
        return float(((a @ a) * a).sum())
    raise ValueError(f"k must be 1, 2 or 3: got {k}")


def max_cov_discrepancy(sample: Sample | np.ndarray, target: np.ndarray) -> float:
    """Entrywise max |sample_second_moment(sample) - target|."""
    z = _values(sample)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != (z.shape[1], z.shape[1]):
        raise DimensionError(
            f"target must have shape ({z.shape[1]}, {z.shape[1]}): got {t.shape}"
        )
    return float(np.abs(sample_second_moment(z) - t).max())


def load_sample_csv(path: str | Path) -> Sample:
    """Read a sample from CSV: one observation per row, optional header line."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1  # header line
    if start == len(lines):
        raise ValueError(f"{path}: no data rows")
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines[start:]]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return Sample(np.asarray(rows, dtype=np.float64))
