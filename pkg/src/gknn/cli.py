"""Command-line entry point: ``gknn <command> [options]``.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import moment_report
from .core import ComponentAbsDiff, MetricSpec, RankDistribution, StdNormalizedEuclidean, TrainingSet, WeightedManhattan
from .distribution import estimate_nu, limit_annual_yield, limit_m_var
from .empirical import compare_to_analytic, run_ensemble
from .io import (
    InputError,
    file_digest,
    read_daily_climate,
    read_monthly_queries,
    read_monthly_training,
    read_tank_config,
    read_yield_column,
    write_csv,
    write_kv,
    write_monthly_training,
)
from .kernel import SyntheticProcess, convergence_experiment
from .tank import TankConfig, aggregate_monthly, simulate_tank
from .upscaling import METHODS, upscale

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


def parse_dist(text: str, n: int) -> RankDistribution:
    """``topk:K``, ``harmonic:K`` or ``explicit:p1,p2,...``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "topk":
            return RankDistribution.top_k_uniform(int(arg), n)
        if kind == "harmonic":
            return RankDistribution.harmonic(int(arg), n)
        if kind == "explicit":
            p = [float(x) for x in arg.split(",")]
            if len(p) > n:
                raise ValueError(f"{len(p)} probabilities for {n} training records")
            return RankDistribution.explicit(p)
    except ValueError as exc:
        raise InputError(f"--dist {text}: {exc}") from None
    raise InputError(f"--dist {text}: expected topk:K, harmonic:K or explicit:p1,p2,...")


def _int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        a, _, b = part.partition("-")
        out.extend(range(int(a), int(b) + 1) if b else [int(a)])
    return out


def _manifest(path, command, params, inputs) -> None:
    items = [("tool", "gknn"), ("version", __version__), ("command", command)]
    items += [(f"param.{k}", "" if v is None else str(v)) for k, v in sorted(params.items())]
    items += [(f"input.{k}.sha256", file_digest(p)) for k, p in sorted(inputs.items()) if p]
    write_kv(Path(str(path) + ".manifest"), items)


def _problem(training_path, series_path, metric_name):
    """Training set, metric and predictor rows for the analytic commands."""
    schema, training = read_monthly_training(training_path)
    qschema, queries = read_monthly_queries(series_path)
    if qschema != schema:
        raise InputError(f"series schema {qschema} does not match training schema {schema}")
    labels = np.array([np.nan if r.month_label is None else r.month_label for r in training])
    tr_vars = np.array([r.climatic_variables for r in training])
    yields = np.array([r.yield_l for r in training])
    q_labels = np.array([np.nan if r.month_label is None else r.month_label for r in queries])
    q_vars = np.array([r.climatic_variables for r in queries])
    metric_name = metric_name or {"coombes": "nn", "knn": "knn", "bootstrap": "rain"}[schema]
    if metric_name == "rain":
        return TrainingSet(tr_vars[:, -1:], yields), MetricSpec(ComponentAbsDiff(0)), q_vars[:, -1:], queries
    if schema == "bootstrap":
        raise InputError(f"metric {metric_name} needs month labels; bootstrap schema has none")
    ts = TrainingSet(np.column_stack([labels, tr_vars]), yields)
    q = np.column_stack([q_labels, q_vars])
    if metric_name == "nn":
        m = MetricSpec(WeightedManhattan((1.0,) * tr_vars.shape[1]), month_filter=True, label_index=0)
    else:
        m = MetricSpec(StdNormalizedEuclidean(), label_index=0)
    return ts, m, q, queries


def cmd_tank_sim(args) -> int:
    climate = read_daily_climate(args.climate)
    cfg = read_tank_config(args.config) if args.config else TankConfig()
    res = simulate_tank(climate, cfg)
    rows = zip((str(d) for d in climate.dates), climate.rainfall, climate.temperature, res.inflow,
               res.demand, res.yields, res.storage, res.spill)
    write_csv(args.out, ("date", "rain_mm", "temp_c", "inflow_l", "demand_l", "yield_l", "storage_l", "spill_l"),
              rows)
    monthly_out = args.monthly_out or str(Path(args.out).with_name(Path(args.out).stem + "_monthly.csv"))
    write_monthly_training(monthly_out, aggregate_monthly(climate, res.yields, args.schema), args.schema)
    params = {"schema": args.schema, "out": args.out, "monthly_out": monthly_out}
    _manifest(args.out, "tank-sim", params, {"climate": args.climate, "config": args.config})
    return EXIT_OK


def cmd_upscale(args) -> int:
    schema, training = read_monthly_training(args.training)
    qschema, queries = read_monthly_queries(args.series)
    if qschema != schema:
        raise InputError(f"series schema {qschema} does not match training schema {schema}")
    if args.method == "knn" and args.k is None:
        raise InputError("--method knn needs --k")
    if args.runs < 1:
        raise InputError("--runs must be at least 1")
    weights = [float(x) for x in args.weights.split(",")] if args.weights else None
    try:
        y = upscale(args.method, queries, training, k=args.k, seed=args.seed, runs=args.runs, weights=weights)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    labels = [q.month_label for q in queries]
    rows = ((r + 1, t + 1, labels[t], y[r, t]) for r in range(y.shape[0]) for t in range(y.shape[1]))
    write_csv(args.out, ("run", "t", "month_label", "yield_l"), rows)
    params = {"method": args.method, "k": args.k, "seed": args.seed, "runs": args.runs, "weights": args.weights,
              "out": args.out}
    _manifest(args.out, "upscale", params, {"training": args.training, "series": args.series})
    return EXIT_OK


def _summary_path(args) -> str:
    return args.summary or str(Path(args.out).with_suffix(".summary.txt"))


def cmd_moments(args) -> int:
    ts, m, q, _ = _problem(args.training, args.series, args.metric)
    rd = parse_dist(args.dist, ts.n)
    actual = read_yield_column(args.actual) if args.actual else None
    if actual is not None and actual.shape[0] != q.shape[0]:
        raise InputError(f"--actual has {actual.shape[0]} yields for {q.shape[0]} series steps")
    try:
        rep = moment_report(q, ts, m, rd, actual)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = ((mm.t + 1, mm.expected_yield, mm.variance, mm.bias_sq, mm.expected_error) for mm in rep.months)
    write_csv(args.out, ("t", "expected_yield", "variance", "bias_sq", "expected_error"), rows)
    items = [("T", len(rep.months))]
    if rep.total_expected_error is not None:
        items.append(("total_expected_error", rep.total_expected_error))
    a = rep.annual
    if a is not None:
        items += [("m", a.m), ("expected_annual_yield", a.expected_annual_yield), ("var_annual_yield", a.variance),
                  ("C", a.variance_constant), ("C_over_m", a.bound), ("bound_ok", a.bound_ok),
                  ("var_total_yield", a.total_yield_variance)]
    summary = _summary_path(args)
    write_kv(summary, items)
    params = {"dist": args.dist, "metric": m.variant.__class__.__name__, "out": args.out, "summary": summary}
    _manifest(args.out, "moments", params, {"training": args.training, "series": args.series, "actual": args.actual})
    return EXIT_OK


def cmd_verify(args) -> int:
    ts, m, q, _ = _problem(args.training, args.series, args.metric)
    rd = parse_dist(args.dist, ts.n)
    actual = read_yield_column(args.actual) if args.actual else None
    if actual is not None and actual.shape[0] != q.shape[0]:
        raise InputError(f"--actual has {actual.shape[0]} yields for {q.shape[0]} series steps")
    if args.runs < 2:
        raise InputError("--runs must be at least 2")
    rep = moment_report(q, ts, m, rd, actual)
    ens = run_ensemble(q, ts, m, rd, args.seed, args.runs, actual=actual, workers=args.workers)
    table = compare_to_analytic(ens, rep, threshold=args.threshold)
    rows = ((r.quantity, None if r.t is None else r.t + 1, r.empirical, r.analytic, r.se, r.z, r.flagged)
            for r in table)
    write_csv(args.out, ("quantity", "t", "empirical", "analytic", "se", "z", "flagged"), rows)
    params = {"dist": args.dist, "metric": m.variant.__class__.__name__, "seed": args.seed, "runs": args.runs,
              "threshold": args.threshold, "out": args.out}
    _manifest(args.out, "verify", params, {"training": args.training, "series": args.series, "actual": args.actual})
    flagged = sum(r.flagged for r in table)
    if flagged:
        print(f"{flagged} of {len(table)} quantities exceed |z| > {args.threshold:g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_kernel_exp(args) -> int:
    try:
        n_values = _int_list(args.n_values)
        seeds = _int_list(args.seeds)
        rows = convergence_experiment(SyntheticProcess(), n_values, seeds)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    write_csv(args.out, ("N", "k_N", "seed", "sup_error", "mean_error"),
              ((r.N, r.k_N, r.seed, r.sup_error, r.mean_error) for r in rows))
    _manifest(args.out, "kernel-exp", {"n_values": args.n_values, "seeds": args.seeds, "out": args.out}, {})
    return EXIT_OK


def cmd_nu(args) -> int:
    ts, m, q, _ = _problem(args.training, args.series, args.metric)
    rd = parse_dist(args.dist, ts.n)
    nu = estimate_nu(q, ts, m, rd)
    freqs = nu.frequencies
    rows = ((" ".join(str(i) for i in key), nu.counts[key], freqs[key]) for key in sorted(nu.counts))
    write_csv(args.out, ("class_key", "count", "frequency"), rows)
    summary = _summary_path(args)
    write_kv(summary, [("T", nu.T), ("classes", len(nu)), ("limit_annual_yield", limit_annual_yield(nu, ts, rd)),
                       ("limit_m_var", limit_m_var(nu, ts, rd))])
    params = {"dist": args.dist, "metric": m.variant.__class__.__name__, "out": args.out, "summary": summary}
    _manifest(args.out, "nu", params, {"training": args.training, "series": args.series})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gknn", description="GkNN temporal upscaling toolkit")
    p.add_argument("--version", action="version", version=f"gknn {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tank-sim", help="daily tank simulation and monthly training table")
    s.add_argument("--climate", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--monthly-out")
    s.add_argument("--schema", choices=("coombes", "knn", "bootstrap"), default="coombes")
    s.set_defaults(func=cmd_tank_sim)

    s = sub.add_parser("upscale", help="resample monthly yields for a query series")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--training", required=True)
    s.add_argument("--series", required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--weights")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_upscale)

    def analytic(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--training", required=True)
        s.add_argument("--series", required=True)
        s.add_argument("--dist", required=True)
        s.add_argument("--metric", choices=("nn", "knn", "rain"))
        s.add_argument("--out", required=True)
        return s

    s = analytic("moments", "closed-form monthly and annual moments")
    s.add_argument("--actual")
    s.add_argument("--summary")
    s.set_defaults(func=cmd_moments)

    s = analytic("verify", "Monte Carlo check of the closed-form moments")
    s.add_argument("--actual")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--runs", type=int, default=10000)
    s.add_argument("--threshold", type=float, default=4.0)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("kernel-exp", help="kernel convergence experiment")
    s.add_argument("--n-values", required=True, help="e.g. 400,2500,10000")
    s.add_argument("--seeds", required=True, help="e.g. 0-19 or 1,2,3")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_kernel_exp)

    s = analytic("nu", "ranking-class frequencies and long-run limits")
    s.add_argument("--summary")
    s.set_defaults(func=cmd_nu)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"gknn {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"gknn {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
