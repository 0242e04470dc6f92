"""Numerical diagnostics: smoothed indicators, moment-growth ratios,
interpolation bound terms, and an anti-concentration estimate.

These quantities measure, on concrete data, the objects that control how well
the multiplier bootstrap tracks the quadratic-form statistic as the dimension
grows with the sample size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionError, NotPSDError
from .refdist import weighted_chisq_sample
from .stats import Sample, _values, check_symmetric, sample_second_moment
from .weights import RngState

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class SmoothIndicatorParams:
    """Threshold t, ramp width delta > 0, smoothing bandwidth h > 0."""

    t: float
    delta: float
    h: float

    def __post_init__(self) -> None:
        if not (self.delta > 0):
            raise ValueError(f"delta must be > 0: got {self.delta}")
        if not (self.h > 0):
            raise ValueError(f"h must be > 0: got {self.h}")


def ramp_indicator(u: float, t: float, delta: float) -> float:
    """Piecewise-linear surrogate for 1{u >= t}: 0 below t-delta, ramp to 1 at t."""
    if not (delta > 0):
        raise ValueError(f"delta must be > 0: got {delta}")
    if u >= t:
        return 1.0
    if u <= t - delta:
        return 0.0
    return (u - t + delta) / delta


def smooth_indicator(u: float, params: SmoothIndicatorParams) -> float:
    """Gaussian smoothing of the ramp: E[ramp(u + h*Z)] with Z standard normal.

    Since the ramp is piecewise linear, the convolution integrates in closed
    form. With z1 = (t - u)/h and z0 = (t - delta - u)/h:

        Phi_c(z1) + ((u - t + delta)/delta) * (Phi_c(z0) - Phi_c(z1))
                  + (h/delta) * (phi(z0) - phi(z1))

    where Phi_c is the standard normal survival function and phi its density.
    The value lies in [0, 1] and is nondecreasing in u; its r-th derivative is
    bounded by h**-r for r = 1, 2, 3.
    """
    t, delta, h = params.t, params.delta, params.h
    z1 = (t - u) / h
    z0 = (t - delta - u) / h
    phi0 = np.exp(-0.5 * z0 * z0) / _SQRT_2PI
    phi1 = np.exp(-0.5 * z1 * z1) / _SQRT_2PI
    val = (
        ndtr(-z1)
        + ((u - t + delta) / delta) * (ndtr(-z0) - ndtr(-z1))
        + (h / delta) * (phi0 - phi1)
    )
    return float(min(max(val, 0.0), 1.0))


def bandwidth_bound(delta: float, eps: float) -> float:
    """Largest bandwidth h with Phi(-delta/h) <= eps, namely delta / Phi^-1(1-eps).

    Requires 0 < eps < 0.5 so the normal quantile is positive.
    """
    if not (delta > 0):
        raise ValueError(f"delta must be > 0: got {delta}")
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must be in (0, 0.5): got {eps}")
    return float(delta / ndtri(1.0 - eps))


@dataclass(frozen=True)
class AssumptionReport:
    """Plug-in moment-growth ratios; all must vanish as n grows for the
    bootstrap approximation to be trustworthy at the given (gamma, kappa)."""

    ratio_i: tuple[float, float, float]
    ratio_ii: float
    ratio_iii: float
    gamma: float
    kappa: float
    eig_min: float
    eig_max: float

    def as_lines(self) -> list[str]:
        keys = [
            ("ratio_i_third_moment", self.ratio_i[0]),
            ("ratio_i_fourth_moment", self.ratio_i[1]),
            ("ratio_i_dim4_over_n", self.ratio_i[2]),
            ("ratio_ii", self.ratio_ii),
            ("ratio_iii", self.ratio_iii),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("eig_min", self.eig_min),
            ("eig_max", self.eig_max),
        ]
        return [f"{k}={v:.17g}" for k, v in keys]


def assumption_report(
    sample: Sample | np.ndarray, gamma: float, kappa: float
) -> AssumptionReport:
    """Evaluate the moment-growth ratios on plug-in sample moments.

    ratio_i components: d * (E||Z||_2^3)^2 / n, E||Z||_2^4 / n, d^4 / n.
    ratio_ii: d^(2+gamma) / n^gamma * E||Z||_2^(4+2*gamma).
    ratio_iii: (log d)^(kappa/2) * d^(2+kappa) / n^(1+kappa/2)
               * E[(sum_l |Z_l|^(2+kappa))^2].
    """
    if gamma < 0 or kappa < 0:
        raise ValueError("gamma and kappa must be >= 0")
    z = _values(sample)
    n, d = z.shape
    r2 = np.linalg.norm(z, axis=1)
    mean3 = float((r2**3).mean())
    mean4 = float((r2**4).mean())
    mean_4_2g = float((r2 ** (4.0 + 2.0 * gamma)).mean())
    mixed = float(((np.abs(z) ** (2.0 + kappa)).sum(axis=1) ** 2).mean())
    ratio_i = (d * mean3**2 / n, mean4 / n, float(d) ** 4 / n)
    ratio_ii = d ** (2.0 + gamma) / n**gamma * mean_4_2g
    ratio_iii = (
        float(np.log(d)) ** (kappa / 2.0)
        * d ** (2.0 + kappa)
        / n ** (1.0 + kappa / 2.0)
        * mixed
    )
    eigs = np.linalg.eigvalsh(sample_second_moment(z))
    return AssumptionReport(
        ratio_i=ratio_i,
        ratio_ii=float(ratio_ii),
        ratio_iii=float(ratio_iii),
        gamma=float(gamma),
        kappa=float(kappa),
        eig_min=float(eigs[0]),
        eig_max=float(eigs[-1]),
    )


def _draw_moments(draws: np.ndarray, powers: tuple[float, ...]) -> dict[float, np.ndarray]:
    norms = np.linalg.norm(draws, axis=2)  # (reps, n)
    return {p: (norms**p).mean(axis=0) for p in powers}


def lindeberg_terms(
    a_draws: np.ndarray,
    b_draws: np.ndarray,
    l2: float,
    l3: float,
    q: float,
) -> tuple[float, float, float]:
    """Plug-in upper-bound terms for the one-summand-at-a-time swap of
    sum_i A_i against sum_i B_i through a smooth test function f.

    ``a_draws`` and ``b_draws`` hold replicate draws of the summand rows,
    shaped (reps, n, d) (a single (n, d) draw is promoted); expectations are
    replaced by averages over the replicate axis. With L2, L3 bounding the
    second and third derivative of f, the quantities returned are

        S1 = L2 * sum_i E[||B_i||^4 + ||A_i||^4]
        S2 = L2 * sqrt(sum_j tr C_j) * sum_i (E||B_i||^3 + E||A_i||^3)
        R  = sum_i (E||B_i||^(2+q) + E||A_i||^(2+q))
                 * max{(sum_j E||S_j||^2)^(1+q/2), sum_j E||S_j||^(2+q)}
             + sum_i E[||B_i||^(4+2q) + ||A_i||^(4+2q)]

    where tr C_j pools the A- and B-side second moments and the S_j moments
    take the per-index worst of the two sides. R is reported unscaled; the
    swap bound applies it with the factor L2 * (L3/L2)**q.
    """
    a = np.asarray(a_draws, dtype=np.float64)
    b = np.asarray(b_draws, dtype=np.float64)
    if a.ndim == 2:
        a = a[None, :, :]
    if b.ndim == 2:
        b = b[None, :, :]
    if a.ndim != 3 or b.ndim != 3 or a.shape[1:] != b.shape[1:]:
        raise DimensionError(
            f"draws must share (n, d): got {a.shape} and {b.shape}"
        )
    if not (l2 > 0 and l3 > 0 and q > 0):
        raise ValueError("l2, l3 and q must be > 0")
    powers = (2.0, 3.0, 4.0, 2.0 + q, 4.0 + 2.0 * q)
    ma = _draw_moments(a, powers)
    mb = _draw_moments(b, powers)
    s1 = l2 * float((mb[4.0] + ma[4.0]).sum())
    tr_pool = 0.5 * (ma[2.0] + mb[2.0])
    s2 = l2 * float(np.sqrt(tr_pool.sum()) * (mb[3.0] + ma[3.0]).sum())
    m2 = np.maximum(ma[2.0], mb[2.0])
    m2q = np.maximum(ma[2.0 + q], mb[2.0 + q])
    s_term = max(float(m2.sum()) ** (1.0 + 0.5 * q), float(m2q.sum()))
    r = float((mb[2.0 + q] + ma[2.0 + q]).sum()) * s_term
    r += float((mb[4.0 + 2.0 * q] + ma[4.0 + 2.0 * q]).sum())
    return float(s1), float(s2), float(r)


def anticoncentration_estimate(
    sigma: np.ndarray, gamma: float, draws: int, rng: RngState
) -> float:
    """Largest probability mass of ||N(0, sigma)||^2 in any short interval.

    Draws ``draws`` values, then slides a window of half-width
    gamma * sqrt(tr(sigma^2)) over centers placed at 200 empirical quantiles
    of the draws (dense where the mass is dense) and returns the maximum
    captured fraction.
    """
    s = check_symmetric(sigma, "sigma")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0: got {gamma}")
    if draws < 10_000:
        raise ValueError(f"draws must be >= 10000: got {draws}")
    vals = np.linalg.eigvalsh(s)
    lam_max = max(vals[-1], 0.0)
    if vals[0] < -1e-10 * max(lam_max, 1e-300):
        raise NotPSDError(f"sigma has negative eigenvalue {vals[0]:.3e}")
    lam = np.clip(vals, 0.0, None)
    x = np.sort(weighted_chisq_sample(lam, draws, rng))
    w = gamma * np.sqrt(float((lam * lam).sum()))
    centers = x[:: max(1, draws // 200)]
    lo = np.searchsorted(x, centers - w, side="left")
    hi = np.searchsorted(x, centers + w, side="right")
    return float((hi - lo).max() / draws)
