"""Reference distributions the bootstrap is compared against.

Chi-square CDF/quantiles, Monte Carlo sampling of eigenvalue-weighted
chi-square sums, and the mean-variance standardization of a quadratic form.
Weighted chi-square quantiles are served by Monte Carlo rather than
characteristic-function inversion; at 10^6 draws this doubles as an
independent oracle for the plain chi-square routines.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc

from .stats import check_symmetric, trace_power
from .weights import RngState


def chisq_cdf(d: int, x: float) -> float:
    """P(chi-square with d degrees of freedom <= x).

    Computed as the regularized lower incomplete gamma P(d/2, x/2),
    absolute accuracy well below 1e-10.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"degrees of freedom must be a positive integer: got {d}")
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"x must be finite and >= 0: got {x}")
    return float(gammainc(d / 2.0, x / 2.0))


def chisq_quantile(d: int, alpha: float) -> float:
    """x with chisq_cdf(d, x) = alpha, by bracketed root-finding."""
    if int(d) != d or d < 1:
        raise ValueError(f"degrees of freedom must be a positive integer: got {d}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1): got {alpha}")
    hi = d + 10.0 * np.sqrt(2.0 * d) + 10.0
    while chisq_cdf(d, hi) <= alpha:
        hi *= 2.0
    return float(brentq(lambda x: chisq_cdf(d, x) - alpha, 0.0, hi, xtol=1e-13, rtol=8.9e-16))


def weighted_chisq_sample(spectrum: np.ndarray, m: int, rng: RngState) -> np.ndarray:
    """m iid draws of sum_j lambda_j * chisq_1, lambda_j >= 0.

    Equivalently ||N(0, Sigma)||_2^2 for Sigma with the given eigenvalues.
    """
    lam = np.asarray(spectrum, dtype=np.float64).ravel()
    if lam.size < 1:
        raise ValueError("spectrum must be nonempty")
    if not np.isfinite(lam).all() or (lam < 0).any():
        raise ValueError("spectrum entries must be finite and >= 0")
    if m < 1:
        raise ValueError(f"m must be >= 1: got {m}")
    gen = rng.generator()
    out = np.zeros(m)
    for lj in lam:
        xi = gen.standard_normal(m)
        out += lj * xi * xi
    return out


def normalized_stat(q: float, sigma: np.ndarray) -> float:
    """(q - tr Sigma) / sqrt(2 tr Sigma^2)."""
    s = check_symmetric(sigma, "sigma")
    t2 = trace_power(s, 2)
    if t2 <= 0.0:
        raise ValueError("sigma is degenerate: tr(sigma^2) must be > 0")
    return float((q - trace_power(s, 1)) / np.sqrt(2.0 * t2))
