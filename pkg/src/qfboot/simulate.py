"""Monte Carlo study harness.

One study draws R samples of scaled uniforms Z_i = V^(1/2) sqrt(12) U_i with
U_i uniform on (-0.5, 0.5)^d, computes the quadratic-form statistic and its
per-replication bootstrap quantiles, and aggregates the worst coverage error
over a grid of levels, both against the bootstrap quantiles and against the
chi-square quantiles with d degrees of freedom.

Everything is deterministic given the config seed: replication r draws its
data from (seed, r, 0) and its bootstrap weights from (seed, r, b), b = 1..B,
so outputs are byte-identical across thread counts.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .bootstrap import (
    DEFAULT_LEVELS,
    QuantileGrid,
    as_grid,
    bootstrap_distribution,
    bootstrap_quantile,
    coverage_discrepancy,
)
from .refdist import chisq_quantile
from .stats import Sample, matrix_sqrt
from .weights import SCHEMES, RngState

DRule = tuple[str, int | float]
VSpec = tuple  # ("identity",) | ("inflate", eps) | ("user", matrix)

_TABLE_NS = (250, 500, 1000, 2000, 3000)
_TABLE_EPS = (0, 4, 8, 12, 16, 20, 24, 28)
_TABLE_RULES = ("1/5", "1/4", "1/3", "1/2", "3/4")


@dataclass(frozen=True)
class SimConfig:
    """Full description of one Monte Carlo experiment."""

    n: int
    d_rule: DRule = ("fixed", 3)
    v_spec: VSpec = ("identity",)
    scheme: str = "gaussian"
    mc_reps: int = 500
    boot_reps: int = 500
    seed: int = 0
    levels: tuple[float, ...] = DEFAULT_LEVELS

    def __post_init__(self) -> None:
        if self.n < 1 or self.mc_reps < 1 or self.boot_reps < 1:
            raise ValueError("n, mc_reps and boot_reps must all be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}: got {self.scheme!r}")
        kind = self.d_rule[0]
        if kind == "fixed":
            if int(self.d_rule[1]) < 1:
                raise ValueError(f"fixed dimension must be >= 1: got {self.d_rule[1]}")
        elif kind == "power":
            if not (0 < float(self.d_rule[1]) < 1):
                raise ValueError(f"power exponent must be in (0, 1): got {self.d_rule[1]}")
        else:
            raise ValueError(f"d_rule kind must be 'fixed' or 'power': got {kind!r}")
        vkind = self.v_spec[0]
        if vkind == "inflate":
            if float(self.v_spec[1]) < 0:
                raise ValueError(f"inflate epsilon must be >= 0: got {self.v_spec[1]}")
        elif vkind == "user":
            if np.asarray(self.v_spec[1]).ndim != 2:
                raise ValueError("user v_spec must carry a square matrix")
        elif vkind != "identity":
            raise ValueError(f"v_spec kind must be identity/inflate/user: got {vkind!r}")
        object.__setattr__(self, "levels", as_grid(self.levels).levels)


@dataclass(frozen=True)
class StudyResult:
    kb: float
    k_chisq: float
    per_level_errors: tuple[float, ...]
    per_level_errors_chisq: tuple[float, ...]
    levels: tuple[float, ...]
    mc_reps: int
    boot_reps: int
    runtime_s: float


def derive_d(rule: DRule, n: int) -> int:
    """fixed(k) -> k; power(p) -> round-half-up of n**p, floored at 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1: got {n}")
    kind, arg = rule
    if kind == "fixed":
        return int(arg)
    return max(1, math.floor(float(n) ** float(arg) + 0.5))


def _v_sqrt(config: SimConfig, d: int) -> tuple[float, np.ndarray | None]:
    """V^(1/2) as (scalar factor, optional matrix)."""
    kind = config.v_spec[0]
    if kind == "identity":
        return 1.0, None
    if kind == "inflate":
        eps = float(config.v_spec[1])
        return math.sqrt(1.0 + eps / math.sqrt(config.n)), None
    v = np.asarray(config.v_spec[1], dtype=np.float64)
    if v.shape != (d, d):
        raise ValueError(f"user V must be ({d}, {d}): got {v.shape}")
    return 1.0, matrix_sqrt(v)


def _draw_values(config: SimConfig, d: int, rep: int, scale: float, root: np.ndarray | None) -> np.ndarray:
    gen = RngState(config.seed, rep, 0).generator()
    z = math.sqrt(12.0) * (gen.random((config.n, d)) - 0.5)
    if root is not None:
        z = z @ root
    elif scale != 1.0:
        z = scale * z
    return z


def dgp_draw(config: SimConfig, rep: int) -> Sample:
    """Sample for replication ``rep`` (stream (seed, rep, 0))."""
    d = derive_d(config.d_rule, config.n)
    scale, root = _v_sqrt(config, d)
    return Sample(_draw_values(config, d, rep, scale, root))


def run_study(config: SimConfig, threads: int = 1) -> StudyResult:
    """Run one full study; deterministic given the config, any thread count."""
    t0 = time.perf_counter()
    d = derive_d(config.d_rule, config.n)
    scale, root = _v_sqrt(config, d)
    levels = config.levels
    R, B = config.mc_reps, config.boot_reps
    q_stats = np.empty(R)
    boot_q = np.empty((R, len(levels)))

    def one_rep(r: int) -> None:
        z = _draw_values(config, d, r, scale, root)
        s = z.sum(axis=0)
        q_stats[r] = (s @ s) / config.n
        dist = bootstrap_distribution(z, config.scheme, B, RngState(config.seed, r, 0))
        for j, a in enumerate(levels):
            boot_q[r, j] = bootstrap_quantile(dist, a)

    if threads <= 1:
        for r in range(R):
            one_rep(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one_rep, range(R)))

    targets = 1.0 - np.asarray(levels)
    boot_err = np.abs((q_stats[:, None] >= boot_q).mean(axis=0) - targets)
    chi_q = np.array([chisq_quantile(d, a) for a in levels])
    chi_err = np.abs((q_stats[:, None] >= chi_q[None, :]).mean(axis=0) - targets)
    return StudyResult(
        kb=float(boot_err.max()),
        k_chisq=float(chi_err.max()),
        per_level_errors=tuple(float(e) for e in boot_err),
        per_level_errors_chisq=tuple(float(e) for e in chi_err),
        levels=levels,
        mc_reps=R,
        boot_reps=B,
        runtime_s=time.perf_counter() - t0,
    )


def noise_band(level: float, mc_reps: int) -> float:
    """Binomial standard error of a coverage estimate at the given level."""
    return math.sqrt(level * (1.0 - level) / mc_reps)


def study_csv(config: SimConfig, result: StudyResult) -> str:
    """Per-level coverage errors plus the max rows, as a CSV string.

    Runtime is deliberately excluded so reruns are byte-identical.
    """
    lines = ["level,boot_error,chisq_error,noise_band"]
    for a, eb, ec in zip(result.levels, result.per_level_errors, result.per_level_errors_chisq):
        lines.append(f"{a:.10g},{eb:.17g},{ec:.17g},{noise_band(a, result.mc_reps):.17g}")
    lines.append(f"max,{result.kb:.17g},{result.k_chisq:.17g},")
    return "\n".join(lines) + "\n"


def run_figure1(base: SimConfig, eps_list: Sequence[float], threads: int = 1) -> list[tuple[float, float]]:
    """log(K / K_bootstrap) across variance inflations epsilon.

    A zero bootstrap discrepancy yields the +inf sentinel in the log ratio.
    """
    if len(eps_list) == 0:
        raise ValueError("eps_list must be nonempty")
    rows = []
    for eps in eps_list:
        res = run_study(replace(base, v_spec=("inflate", float(eps))), threads=threads)
        ratio = math.inf if res.kb == 0.0 else math.log(res.k_chisq / res.kb)
        rows.append((float(eps), ratio))
    return rows


def figure1_csv(rows: Sequence[tuple[float, float]]) -> str:
    lines = ["eps,log_ratio"]
    for eps, ratio in rows:
        lines.append(f"{eps:.10g},{'inf' if math.isinf(ratio) else format(ratio, '.17g')}")
    return "\n".join(lines) + "\n"


def _scale_reps(which: str, scale: str) -> tuple[int, int]:
    if scale not in ("desk", "paper"):
        raise ValueError(f"scale must be 'desk' or 'paper': got {scale!r}")
    boot = 2000 if which == "t4" else 5000
    r, b = 5000, boot
    if scale == "desk":
        r, b = r // 10, b // 10
    return r, b


def run_table(which: str, scale: str = "desk", seed: int = 0, threads: int = 1) -> str:
    """Reproduce one of the four study tables as a CSV string.

    t1: per-level coverage errors (x100) at n=500, d=3 across inflations.
    t2: bootstrap/chi-square discrepancy ratio for d = n^(1/5) across n.
    t3: 100 * bootstrap discrepancy across n and dimension rules.
    t4: 100 * bootstrap discrepancy across n and weight schemes, d = n^(1/5).

    Desk scale divides the replication counts by 10 and appends a noise-band
    column (binomial stderr of a coverage estimate, same units as the table).
    """
    R, B = _scale_reps(which, scale)
    desk = scale == "desk"
    base = SimConfig(n=500, mc_reps=R, boot_reps=B, seed=seed)

    if which == "t1":
        cols = []
        for eps in _TABLE_EPS:
            cfg = replace(base, d_rule=("fixed", 3), v_spec=("inflate", float(eps)))
            cols.append(run_study(cfg, threads=threads).per_level_errors)
        header = "level," + ",".join(f"eps={e}" for e in _TABLE_EPS)
        if desk:
            header += ",noise_band"
        lines = [header]
        for j, a in enumerate(base.levels):
            row = f"{a:.10g}," + ",".join(f"{100 * c[j]:.4f}" for c in cols)
            if desk:
                row += f",{100 * noise_band(a, R):.4f}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    if which == "t2":
        lines = ["n,kb_over_k,kb_x100,k_x100" + (",noise_band" if desk else "")]
        for n in _TABLE_NS:
            cfg = replace(base, n=n, d_rule=("power", _exponent("1/5")))
            res = run_study(cfg, threads=threads)
            ratio = math.inf if res.k_chisq == 0.0 else res.kb / res.k_chisq
            row = f"{n},{ratio:.4f},{100 * res.kb:.4f},{100 * res.k_chisq:.4f}"
            if desk:
                row += f",{100 * max(noise_band(a, R) for a in base.levels):.4f}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    if which == "t3":
        header = "n," + ",".join(f"d=n^{r}" for r in _TABLE_RULES)
        if desk:
            header += ",noise_band"
        lines = [header]
        for n in _TABLE_NS:
            vals = []
            for rtxt in _TABLE_RULES:
                cfg = replace(base, n=n, d_rule=("power", _exponent(rtxt)))
                vals.append(run_study(cfg, threads=threads).kb)
            row = f"{n}," + ",".join(f"{100 * v:.4f}" for v in vals)
            if desk:
                row += f",{100 * max(noise_band(a, R) for a in base.levels):.4f}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    if which == "t4":
        header = "n,gaussian,uniform,t3"
        if desk:
            header += ",noise_band"
        lines = [header]
        for n in _TABLE_NS:
            vals = []
            for scheme in SCHEMES:
                cfg = replace(base, n=n, d_rule=("power", _exponent("1/5")), scheme=scheme)
                vals.append(run_study(cfg, threads=threads).kb)
            row = f"{n}," + ",".join(f"{100 * v:.4f}" for v in vals)
            if desk:
                row += f",{100 * max(noise_band(a, R) for a in base.levels):.4f}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown table {which!r}; expected t1, t2, t3 or t4")


def _exponent(text: str) -> float:
    frac = Fraction(text)
    return float(frac.numerator) / float(frac.denominator)


def parse_config(path: str | Path) -> SimConfig:
    """Read a flat key=value config file.

    Keys: n, d_rule (fixed:K | power:P with P a fraction like 1/5), v
    (identity | inflate:EPS | user:CSVPATH), scheme (gaussian|uniform|t3),
    mc_reps, boot_reps, seed, levels (comma-separated). Unknown keys are an
    error.
    """
    path = Path(path)
    kv: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {line!r}")
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    known = {"n", "d_rule", "v", "scheme", "mc_reps", "boot_reps", "seed", "levels"}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if "n" not in kv:
        raise ValueError(f"{path}: missing required key 'n'")

    d_rule: DRule = ("fixed", 3)
    if "d_rule" in kv:
        kind, _, arg = kv["d_rule"].partition(":")
        if kind == "fixed":
            d_rule = ("fixed", int(arg))
        elif kind == "power":
            d_rule = ("power", _exponent(arg))
        else:
            raise ValueError(f"{path}: bad d_rule {kv['d_rule']!r}")

    v_spec: VSpec = ("identity",)
    if "v" in kv:
        kind, _, arg = kv["v"].partition(":")
        if kind == "identity":
            v_spec = ("identity",)
        elif kind == "inflate":
            v_spec = ("inflate", float(arg))
        elif kind == "user":
            from .stats import load_sample_csv

            v_spec = ("user", load_sample_csv(arg).values)
        else:
            raise ValueError(f"{path}: bad v {kv['v']!r}")

    levels: tuple[float, ...] = DEFAULT_LEVELS
    if "levels" in kv:
        levels = tuple(float(tok) for tok in kv["levels"].split(","))

    return SimConfig(
        n=int(kv["n"]),
        d_rule=d_rule,
        v_spec=v_spec,
        scheme=kv.get("scheme", "gaussian"),
        mc_reps=int(kv.get("mc_reps", "500")),
        boot_reps=int(kv.get("boot_reps", "500")),
        seed=int(kv.get("seed", "0")),
        levels=levels,
    )
