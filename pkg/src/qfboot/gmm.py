"""GMM and GEL estimation with model-specification tests.

Both estimators minimize a criterion built from moment conditions
E[g(X, theta0)] = 0 with d >= q (overidentified or just-identified). The
specification-test statistics are

    GMM: n * gbar(theta_hat)' W gbar(theta_hat)
    GEL: 2 * (sup_lambda sum_i s(lambda' g_i(theta_hat)) - n * s(0))

and their multiplier-bootstrap analogs replace g_i by w_i * g_i with iid
mean-0 variance-1 weights, re-estimating the parameter in every replicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .bootstrap import (
    BootstrapDistribution,
    QuantileGrid,
    as_grid,
    bootstrap_pvalue,
    bootstrap_quantile,
)
from .errors import DimensionError
from .weights import RngState, weight_stream

_START_FRACTIONS = (0.5, 0.15, 0.85, 0.3, 0.7)


@dataclass(frozen=True)
class MomentModel:
    """Moment-condition specification.

    ``g`` is vectorized: g(data, theta) maps an (n, m) data array and a
    length-q parameter vector to the (n, d) array of moment evaluations.
    """

    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    q: int
    d: int
    theta_bounds: np.ndarray

    def __post_init__(self) -> None:
        if self.d < self.q:
            raise ValueError(f"need d >= q: got d={self.d}, q={self.q}")
        b = np.asarray(self.theta_bounds, dtype=np.float64)
        if b.shape != (self.q, 2) or not np.isfinite(b).all() or (b[:, 0] >= b[:, 1]).any():
            raise ValueError("theta_bounds must be a (q, 2) array of finite lo < hi rows")
        object.__setattr__(self, "theta_bounds", b)

    def moments(self, data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        out = np.asarray(self.g(np.asarray(data, dtype=np.float64), np.asarray(theta, dtype=np.float64)))
        if out.ndim != 2 or out.shape[1] != self.d:
            raise DimensionError(f"g returned shape {out.shape}, expected (n, {self.d})")
        return out


@dataclass(frozen=True)
class GelKernel:
    """Concave criterion kernel s with s'(0) = s''(0) = -1.

    ``domain_upper`` bounds the argument v = lambda' g from above (1 for
    empirical likelihood, +inf otherwise).
    """

    kind: str
    s: Callable[[np.ndarray], np.ndarray]
    s1: Callable[[np.ndarray], np.ndarray]
    s2: Callable[[np.ndarray], np.ndarray]
    domain_upper: float


def kernel(kind: str) -> GelKernel:
    """Build one of the three standard kernels: "el", "et" or "cue"."""
    if kind == "el":
        return GelKernel(
            kind="el",
            s=lambda v: np.log1p(-v),
            s1=lambda v: -1.0 / (1.0 - v),
            s2=lambda v: -1.0 / (1.0 - v) ** 2,
            domain_upper=1.0,
        )
    if kind == "et":
        return GelKernel(
            kind="et",
            s=lambda v: -np.exp(np.minimum(v, 700.0)),
            s1=lambda v: -np.exp(np.minimum(v, 700.0)),
            s2=lambda v: -np.exp(np.minimum(v, 700.0)),
            domain_upper=math.inf,
        )
    if kind == "cue":
        return GelKernel(
            kind="cue",
            s=lambda v: -0.5 * (1.0 + v) ** 2,
            s1=lambda v: -(1.0 + v),
            s2=lambda v: -np.ones_like(np.asarray(v, dtype=np.float64)),
            domain_upper=math.inf,
        )
    raise ValueError(f"unknown kernel kind {kind!r}; expected 'el', 'et' or 'cue'")


@dataclass(frozen=True)
class GmmConfig:
    """Weight-matrix choice and optimizer tolerances for GMM."""

    weight_matrix: str | np.ndarray = "identity"
    xatol: float = 1e-9
    maxiter: int = 2000

    def __post_init__(self) -> None:
        if isinstance(self.weight_matrix, str):
            if self.weight_matrix not in ("identity", "two_step"):
                raise ValueError(
                    f"weight_matrix must be 'identity', 'two_step' or a matrix: "
                    f"got {self.weight_matrix!r}"
                )
        else:
            w = np.asarray(self.weight_matrix, dtype=np.float64)
            _check_weight_matrix(w, w.shape[0])
            object.__setattr__(self, "weight_matrix", w)


@dataclass(frozen=True)
class EstimationResult:
    theta_hat: np.ndarray
    objective_value: float
    mst_stat: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class GelInnerResult:
    lambda_hat: np.ndarray
    value: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class MstTestResult:
    stat: float
    pvalue: float
    quantiles: tuple[float, ...]
    levels: tuple[float, ...]
    n_nonconverged: int


def _check_weight_matrix(w: np.ndarray, d: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d, d):
        raise DimensionError(f"weight matrix must be ({d}, {d}): got {w.shape}")
    if not np.isfinite(w).all() or np.abs(w - w.T).max() > 1e-10 * max(1.0, np.abs(w).max()):
        raise ValueError("weight matrix must be finite and symmetric")
    if np.linalg.eigvalsh(w)[0] <= 0:
        raise ValueError("weight matrix must be positive definite")
    return 0.5 * (w + w.T)


def gmm_objective(
    model: MomentModel,
    data: np.ndarray,
    theta: np.ndarray,
    weight: np.ndarray,
    w: np.ndarray | None = None,
) -> float:
    """gbar' weight gbar with gbar = n^-1 sum_i (w_i) g(x_i, theta)."""
    g_rows = model.moments(data, theta)
    if w is not None:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (g_rows.shape[0],):
            raise DimensionError(
                f"weights must have shape ({g_rows.shape[0]},): got {w.shape}"
            )
        g_rows = w[:, None] * g_rows
    weight = np.asarray(weight, dtype=np.float64)
    if weight.shape != (model.d, model.d):
        raise DimensionError(
            f"weight matrix must be ({model.d}, {model.d}): got {weight.shape}"
        )
    gbar = g_rows.mean(axis=0)
    return float(gbar @ weight @ gbar)


def _minimize_box(
    fun: Callable[[np.ndarray], float],
    bounds: np.ndarray,
    xatol: float,
    maxiter: int,
) -> tuple[np.ndarray, float, bool, int]:
    """Derivative-free minimization over a box; scalar problems get a
    bounded-Brent pass plus a simplex polish, vector ones multi-start simplex."""
    q = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    if q == 1:
        res = minimize_scalar(
            lambda x: fun(np.array([x])),
            bounds=(lo[0], hi[0]),
            method="bounded",
            options={"xatol": min(xatol, 1e-11), "maxiter": maxiter},
        )
        x_best = np.array([float(res.x)])
        return x_best, float(res.fun), bool(res.success), int(res.nfev)

    span = hi - lo
    best: tuple[np.ndarray, float, bool] | None = None
    iters = 0
    for k in range(5):
        x0 = lo + np.array(
            [_START_FRACTIONS[(k + i) % len(_START_FRACTIONS)] for i in range(q)]
        ) * span
        f0 = fun(x0)
        res = minimize(
            fun,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={
                "xatol": xatol,
                "fatol": 1e-10 * max(1.0, abs(f0)),
                "maxiter": maxiter,
            },
        )
        iters += int(res.nit)
        if best is None or res.fun < best[1]:
            best = (np.asarray(res.x, dtype=np.float64), float(res.fun), bool(res.success))
    assert best is not None
    return best[0], best[1], best[2], iters


def _two_step_weight(g_rows: np.ndarray, d: int) -> np.ndarray:
    """Inverse of the uncentered second moment of the moment rows, with a
    small ridge when the moment covariance is numerically singular."""
    n = g_rows.shape[0]
    m = (g_rows.T @ g_rows) / n
    m = 0.5 * (m + m.T)
    eigs = np.linalg.eigvalsh(m)
    if eigs[0] <= 1e-12 * max(eigs[-1], 1e-300):
        m = m + (1e-10 * np.trace(m) / d) * np.eye(d)
    w = np.linalg.solve(m, np.eye(d))
    return 0.5 * (w + w.T)


def resolve_weight_matrix(
    model: MomentModel,
    data: np.ndarray,
    config: GmmConfig,
    w: np.ndarray | None = None,
) -> np.ndarray:
    """Materialize the GMM weight matrix (runs the first step if two-step)."""
    if not isinstance(config.weight_matrix, str):
        return _check_weight_matrix(config.weight_matrix, model.d)
    if config.weight_matrix == "identity":
        return np.eye(model.d)
    first = gmm_estimate(model, data, replace(config, weight_matrix="identity"), w=w)
    g_rows = model.moments(data, first.theta_hat)
    if w is not None:
        g_rows = np.asarray(w, dtype=np.float64)[:, None] * g_rows
    return _two_step_weight(g_rows, model.d)


def gmm_estimate(
    model: MomentModel,
    data: np.ndarray,
    config: GmmConfig | None = None,
    w: np.ndarray | None = None,
) -> EstimationResult:
    """Minimize the GMM objective over the parameter box.

    The specification statistic is n times the objective at the minimizer.
    Optimizer non-convergence is reported through the ``converged`` flag,
    never raised.
    """
    config = config or GmmConfig()
    if isinstance(config.weight_matrix, str) and config.weight_matrix == "two_step":
        weight = resolve_weight_matrix(model, data, config, w=w)
    elif isinstance(config.weight_matrix, str):
        weight = np.eye(model.d)
    else:
        weight = config.weight_matrix
    theta, fval, ok, iters = _minimize_box(
        lambda th: gmm_objective(model, data, th, weight, w=w),
        model.theta_bounds,
        config.xatol,
        config.maxiter,
    )
    n = np.asarray(data).shape[0]
    return EstimationResult(
        theta_hat=theta,
        objective_value=fval,
        mst_stat=float(n * fval),
        converged=ok,
        iterations=iters,
    )


def gel_inner_solve(
    model: MomentModel,
    data: np.ndarray,
    theta: np.ndarray,
    kern: GelKernel,
    w: np.ndarray | None = None,
    grad_tol: float = 1e-10,
    maxiter: int = 200,
) -> GelInnerResult:
    """Maximize sum_i s(lambda' g_i) over lambda by damped Newton from 0.

    Backtracking keeps every lambda' g_i strictly inside the kernel domain
    (steps capped at 0.99 of the distance to the boundary). A singular
    curvature matrix is retried with an escalating ridge; persistent failure
    sets ``converged`` to False rather than raising.
    """
    g_rows = model.moments(data, theta)
    if w is not None:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (g_rows.shape[0],):
            raise DimensionError(
                f"weights must have shape ({g_rows.shape[0]},): got {w.shape}"
            )
        g_rows = w[:, None] * g_rows
    n, d = g_rows.shape
    upper = kern.domain_upper
    lam = np.zeros(d)
    v = np.zeros(n)
    val = float(kern.s(v).sum())
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        grad = g_rows.T @ kern.s1(v)
        if np.linalg.norm(grad) <= grad_tol * n:
            converged = True
            break
        curv = -(g_rows.T @ (kern.s2(v)[:, None] * g_rows))
        step = None
        ridge = 1e-10 * max(1.0, float(np.trace(curv)) / d)
        for _ in range(10):
            try:
                c = np.linalg.cholesky(curv)
                step = np.linalg.solve(c.T, np.linalg.solve(c, grad))
                break
            except np.linalg.LinAlgError:
                curv = curv + ridge * np.eye(d)
                ridge *= 10.0
        if step is None:
            break
        dv = g_rows @ step
        alpha = 1.0
        if np.isfinite(upper):
            rising = dv > 0
            if rising.any():
                alpha = min(1.0, 0.99 * float(((upper - v[rising]) / dv[rising]).min()))
        slope = float(grad @ step)
        accepted = False
        while alpha > 1e-16:
            v_new = v + alpha * dv
            if np.isfinite(upper) and v_new.max() >= upper:
                alpha *= 0.5
                continue
            val_new = float(kern.s(v_new).sum())
            if val_new >= val + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        lam = lam + alpha * step
        v = v_new
        val = val_new
    else:
        it = maxiter
    if not converged:
        grad = g_rows.T @ kern.s1(v)
        converged = bool(np.linalg.norm(grad) <= grad_tol * n)
    return GelInnerResult(lambda_hat=lam, value=val, converged=converged, iterations=it)


def gel_estimate(
    model: MomentModel,
    data: np.ndarray,
    kern: GelKernel,
    w: np.ndarray | None = None,
    xatol: float = 1e-9,
    maxiter: int = 2000,
) -> EstimationResult:
    """Minimize over theta the inner maximum of the GEL criterion.

    The specification statistic is 2 * (inner value at theta_hat - n * s(0));
    it is nonnegative up to round-off because lambda = 0 is always feasible.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    s0 = float(kern.s(np.zeros(1))[0])

    def fun(th: np.ndarray) -> float:
        return gel_inner_solve(model, data, th, kern, w=w).value

    theta, fval, ok, iters = _minimize_box(fun, model.theta_bounds, xatol, maxiter)
    final = gel_inner_solve(model, data, theta, kern, w=w)
    return EstimationResult(
        theta_hat=theta,
        objective_value=final.value,
        mst_stat=float(2.0 * (final.value - n * s0)),
        converged=ok and final.converged,
        iterations=iters + final.iterations,
    )


def mst_bootstrap_pvalue(
    model: MomentModel,
    data: np.ndarray,
    method: tuple[str, GmmConfig | GelKernel] | str,
    scheme: str,
    n_replicates: int,
    rng: RngState,
    levels: Sequence[float] | QuantileGrid | None = None,
) -> MstTestResult:
    """Bootstrap p-value for the specification statistic.

    ``method`` is ("gmm", GmmConfig) or ("gel", GelKernel); a bare "gmm" or
    "gel" string selects defaults (identity weight matrix, CUE kernel).
    Replicate b re-estimates the parameter from the weighted criterion using
    the weights of ``rng.with_substream(b)``. The degenerate scheme "ones"
    (every weight 1) is accepted as a test hook. Raises if more than 5% of
    replicates fail to converge.

    The statistic and its replicates are compared on their raw scale; any
    common monotone normalization drops out of ranks, hence of p-values and
    quantile comparisons.
    """
    if isinstance(method, str):
        method = (method, GmmConfig() if method == "gmm" else kernel("cue"))
    name, spec_obj = method
    if n_replicates < 99:
        raise ValueError(f"n_replicates must be >= 99: got {n_replicates}")
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    grid = as_grid(levels)

    if name == "gmm":
        if not isinstance(spec_obj, GmmConfig):
            raise ValueError("gmm method requires a GmmConfig")
        weight = resolve_weight_matrix(model, data, spec_obj)
        fixed = replace(spec_obj, weight_matrix=weight)
        base = gmm_estimate(model, data, fixed)
        estimate = lambda wts: gmm_estimate(model, data, fixed, w=wts)  # noqa: E731
    elif name == "gel":
        if not isinstance(spec_obj, GelKernel):
            raise ValueError("gel method requires a GelKernel")
        base = gel_estimate(model, data, spec_obj)
        estimate = lambda wts: gel_estimate(model, data, spec_obj, w=wts)  # noqa: E731
    else:
        raise ValueError(f"unknown method {name!r}; expected 'gmm' or 'gel'")
    if not base.converged:
        raise RuntimeError("base estimation did not converge")

    stats = np.empty(n_replicates)
    failures = 0
    if scheme == "ones":
        weights_iter = (np.ones(n) for _ in range(n_replicates))
    else:
        weights_iter = weight_stream(scheme, n, rng, n_replicates)
    for b, wts in enumerate(weights_iter):
        res = estimate(wts)
        stats[b] = max(res.mst_stat, 0.0)
        failures += not res.converged
    if failures > 0.05 * n_replicates:
        raise RuntimeError(
            f"{failures} of {n_replicates} bootstrap replicates failed to converge"
        )
    dist = BootstrapDistribution(replicates=stats, scheme=scheme, seed_record=rng)
    return MstTestResult(
        stat=base.mst_stat,
        pvalue=bootstrap_pvalue(dist, base.mst_stat),
        quantiles=tuple(bootstrap_quantile(dist, a) for a in grid),
        levels=grid.levels,
        n_nonconverged=failures,
    )


def panel_ab_model(n_periods: int) -> MomentModel:
    """First-differenced AR(1) panel moments with lagged-level instruments.

    Observations are rows (y_1, ..., y_T). For each t = 3..T the differenced
    residual (y_t - y_{t-1}) - theta * (y_{t-1} - y_{t-2}) is interacted with
    the instruments y_{t-2}, ..., y_1, giving d = (T-2)(T-1)/2 moments and a
    scalar parameter.
    """
    T = int(n_periods)
    if T < 3:
        raise ValueError(f"need at least 3 periods: got {T}")
    pairs = [(t, s) for t in range(3, T + 1) for s in range(2, t)]
    d = len(pairs)

    def g(data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        y = np.asarray(data, dtype=np.float64)
        if y.ndim != 2 or y.shape[1] != T:
            raise DimensionError(f"data must be (n, {T}): got {y.shape}")
        th = float(np.asarray(theta).ravel()[0])
        cols = np.empty((y.shape[0], d))
        for j, (t, s) in enumerate(pairs):
            resid = (y[:, t - 1] - y[:, t - 2]) - th * (y[:, t - 2] - y[:, t - 3])
            cols[:, j] = resid * y[:, t - s - 1]
        return cols

    return MomentModel(g=g, q=1, d=d, theta_bounds=np.array([[-2.0, 2.0]]))


def _bspline_design(x: np.ndarray, lo: float, hi: float, n_funcs: int) -> np.ndarray:
    """Design matrix of ``n_funcs`` B-splines on equally spaced knots over
    [lo, hi]; degree 2 when possible, dropping to degree 1 (2 funcs) and a
    constant (1 func). Partition of unity holds on the closed interval."""
    x = np.asarray(x, dtype=np.float64)
    if n_funcs == 1:
        return np.ones((x.size, 1))
    if hi <= lo:
        hi = lo + 1.0
    p = 1 if n_funcs == 2 else 2
    breaks = np.linspace(lo, hi, n_funcs - p + 1)
    knots = np.concatenate([np.full(p, lo), breaks, np.full(p, hi)])
    basis = np.zeros((x.size, knots.size - 1))
    for i in range(knots.size - 1):
        if knots[i + 1] > knots[i]:
            ind = (x >= knots[i]) & (x < knots[i + 1])
            if knots[i + 1] == hi:
                ind |= x == hi
            basis[:, i] = ind
    for k in range(1, p + 1):
        nxt = np.zeros((x.size, knots.size - k - 1))
        for i in range(knots.size - k - 1):
            den1 = knots[i + k] - knots[i]
            den2 = knots[i + k + 1] - knots[i + 1]
            term = np.zeros(x.size)
            if den1 > 0:
                term += (x - knots[i]) / den1 * basis[:, i]
            if den2 > 0:
                term += (knots[i + k + 1] - x) / den2 * basis[:, i + 1]
            nxt[:, i] = term
        basis = nxt
    return basis


def conditional_spline_model(
    rho: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_basis: int,
    q: int = 1,
    n_resid: int = 1,
    theta_bounds: np.ndarray | None = None,
) -> MomentModel:
    """Unconditional moments rho(y, theta) (x) basis(w) from a conditional one.

    Observations are rows (y, w) with w in the last column. ``rho`` maps the
    y-values and theta to (n,) or (n, n_resid) residuals; the basis consists
    of ``n_basis`` B-spline functions on equally spaced knots over the
    empirical range of w within the data passed to each call. With ``n_basis``
    = 1 the basis is the constant 1 and the model reduces to the
    unconditional moment E[rho] = 0.
    """
    K = int(n_basis)
    if K < 1:
        raise ValueError(f"n_basis must be >= 1: got {K}")
    d = n_resid * K
    bounds = np.asarray(theta_bounds) if theta_bounds is not None else np.tile([-5.0, 5.0], (q, 1))

    def g(data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise DimensionError(f"data must be (n, >=2) with w last: got {arr.shape}")
        wvar = arr[:, -1]
        yvar = arr[:, 0] if arr.shape[1] == 2 else arr[:, :-1]
        res = np.asarray(rho(yvar, np.asarray(theta, dtype=np.float64)), dtype=np.float64)
        if res.ndim == 1:
            res = res[:, None]
        if res.shape != (arr.shape[0], n_resid):
            raise DimensionError(
                f"rho returned shape {res.shape}, expected ({arr.shape[0]}, {n_resid})"
            )
        basis = _bspline_design(wvar, float(wvar.min()), float(wvar.max()), K)
        return (res[:, :, None] * basis[:, None, :]).reshape(arr.shape[0], d)

    return MomentModel(g=g, q=q, d=d, theta_bounds=bounds)
