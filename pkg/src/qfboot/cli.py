"""Command-line interface.

Subcommands: bootstrap, oracle, diagnose, gmm-test, gel-test, simulate, table.
All tabular output is CSV on stdout (or files under --out for tables);
diagnose prints key=value lines.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bootstrap import bootstrap_distribution, bootstrap_pvalue, bootstrap_quantile
from .diagnostics import assumption_report
from .gmm import GmmConfig, conditional_spline_model, kernel, mst_bootstrap_pvalue, panel_ab_model
from .refdist import weighted_chisq_sample
from .simulate import figure1_csv, parse_config, run_figure1, run_study, run_table, study_csv
from .stats import load_sample_csv
from .weights import RngState


def _levels_arg(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(","))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--levels", type=_levels_arg, default=(0.9, 0.95, 0.975, 0.99))


def _cmd_bootstrap(args: argparse.Namespace) -> int:
    sample = load_sample_csv(args.data)
    dist = bootstrap_distribution(sample, args.scheme, args.reps, RngState(args.seed))
    print("name,value")
    for a in args.levels:
        print(f"quantile_{a:g},{bootstrap_quantile(dist, a):.17g}")
    if args.observed is not None:
        print(f"observed,{args.observed:.17g}")
        print(f"pvalue,{bootstrap_pvalue(dist, args.observed):.17g}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    spectrum = np.array([float(tok) for tok in args.spectrum.split(",")])
    draws = weighted_chisq_sample(spectrum, args.draws, RngState(args.seed))
    draws.sort()
    print("level,quantile")
    for a in args.levels:
        idx = min(max(int(np.ceil(a * args.draws - 1e-9)), 1), args.draws)
        print(f"{a:g},{draws[idx - 1]:.17g}")
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    sample = load_sample_csv(args.data)
    report = assumption_report(sample, args.gamma, args.kappa)
    for line in report.as_lines():
        print(line)
    return 0


def _parse_model(token: str):
    kind, _, arg = token.partition(":")
    if kind == "panel":
        return panel_ab_model(int(arg))
    if kind == "spline":
        return conditional_spline_model(lambda y, th: y - th[0], int(arg))
    raise ValueError(f"unknown model {token!r}; expected panel:T or spline:K")


def _cmd_mst(args: argparse.Namespace, use_gel: bool) -> int:
    data = load_sample_csv(args.data).values
    model = _parse_model(args.model)
    if use_gel:
        method = ("gel", kernel(args.kernel))
    else:
        wm = "two_step" if args.weight_matrix == "two-step" else "identity"
        method = ("gmm", GmmConfig(weight_matrix=wm))
    res = mst_bootstrap_pvalue(
        model, data, method, args.scheme, args.reps, RngState(args.seed), levels=args.levels
    )
    header = "stat,pvalue," + ",".join(f"quantile_{a:g}" for a in res.levels)
    row = f"{res.stat:.17g},{res.pvalue:.17g}," + ",".join(f"{q:.17g}" for q in res.quantiles)
    print(header)
    print(row)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    result = run_study(config, threads=args.threads)
    sys.stdout.write(study_csv(config, result))
    print(f"runtime_s={result.runtime_s:.3f}", file=sys.stderr)
    return 0


def _cmd_figure1(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    rows = run_figure1(config, [float(t) for t in args.eps.split(",")], threads=args.threads)
    sys.stdout.write(figure1_csv(rows))
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    csv_text = run_table(args.which, scale=args.scale, seed=args.seed, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{args.which}_{args.scale}.csv"
    target.write_text(csv_text, encoding="utf-8")
    print(str(target))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfboot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bootstrap", help="bootstrap quantiles/p-value for one sample")
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", default="gaussian", choices=("gaussian", "uniform", "t3"))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--observed", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("oracle", help="Monte Carlo quantiles of a weighted chi-square sum")
    p.add_argument("--spectrum", required=True, help="comma-separated eigenvalues")
    p.add_argument("--draws", type=int, default=1_000_000)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("diagnose", help="moment-growth ratios for a sample")
    p.add_argument("--data", required=True)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--kappa", type=float, default=0.0)
    p.set_defaults(func=_cmd_diagnose)

    for name in ("gmm-test", "gel-test"):
        p = sub.add_parser(name, help=f"{name[:3]} specification test with bootstrap p-value")
        p.add_argument("--data", required=True)
        p.add_argument("--model", required=True, help="panel:T or spline:K")
        p.add_argument("--kernel", default="cue", choices=("el", "et", "cue"))
        p.add_argument("--weight-matrix", default="identity", choices=("identity", "two-step"))
        p.add_argument("--scheme", default="gaussian", choices=("gaussian", "uniform", "t3"))
        p.add_argument("--reps", type=int, default=500)
        _add_common(p)
        p.set_defaults(func=lambda a, gel=(name == "gel-test"): _cmd_mst(a, gel))

    p = sub.add_parser("simulate", help="run one study from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("figure1", help="log discrepancy ratio across variance inflations")
    p.add_argument("--config", required=True)
    p.add_argument("--eps", default="0,2,4,6,8,10,12,14,16,18,20,22,24,26,28")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_figure1)

    p = sub.add_parser("table", help="reproduce one of the study tables")
    p.add_argument("--which", required=True, choices=("t1", "t2", "t3", "t4"))
    p.add_argument("--scale", default="desk", choices=("desk", "paper"))
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_table)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
