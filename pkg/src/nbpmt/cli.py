"""Command-line interface: ``nbpmt {simulate,shrink,mcmc,prostate,bounds}``.

Exit codes: 0 on success, 2 for bad input or parameters, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import DomainError, InputError, NumericalError
from .estimators import es_estimate, reml_estimate
from .nbp_model import (AsymptoticScheme, Hyperparams, bound_ew, bound_tail_large, bound_tail_small,
                        kappa_posterior_cdf, shrinkage_weight, type1_lower_bound, type1_upper_bound,
                        type2_bounds)
from .samplers import APrior, ChainSpec, run_chain
from .testing import TwoGroupsSpec, half_threshold


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse number list {text!r}") from exc


def _range(text):
    """'lo:hi:step' inclusive grid, or a comma list."""
    if ":" not in text:
        return np.array(_floats(text))
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise InputError(f"grid must look like lo:hi:step, got {text!r}") from exc
    if not step > 0 or hi < lo:
        raise InputError("grid needs step > 0 and hi >= lo")
    k = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(k + 1)


def read_vector(path):
    """Numbers from a CSV: the column named 'z' or 'x' if there is a header, else the first."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    col, start = 0, 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [h.strip().lower() for h in rows[0]]
        col = next((header.index(k) for k in ("z", "x") if k in header), 0)
        start = 1
    vals = []
    for i, r in enumerate(rows[start:], start=start + 1):
        try:
            v = float(r[col])
        except (ValueError, IndexError) as exc:
            raise InputError(f"{path}: row {i}: cannot read a number from column {col + 1}") from exc
        if not math.isfinite(v):
            raise InputError(f"{path}: row {i} is not finite")
        vals.append(v)
    if not vals:
        raise InputError(f"{path} holds no data rows")
    return np.array(vals)


def _chain(args):
    return ChainSpec(iterations=args.iters, burnin=args.burnin, thin=args.thin, seed=args.seed)


def cmd_simulate(args):
    psi = ex.default_psi(args.n) if args.psi == "auto" else float(args.psi)
    grid = _floats(args.p_grid)
    plan = ex.ExperimentPlan(
        spec=TwoGroupsSpec(args.n, grid[0], psi, args.zeta),
        methods=tuple(m for m in args.methods.split(",") if m.strip()),
        replicates=args.replicates,
        base_seed=args.seed,
        chain=_chain(args),
        b=args.b,
        bh_alpha=args.bh_alpha,
        p_grid=grid,
        workers=args.workers,
    )
    rows = ex.run_experiment(plan)
    ex.write_csv(args.out, ex.COLUMNS, rows)
    summary = {"n": args.n, "psi": psi, "b": plan.b_value, "bh_alpha": plan.alpha_value,
               "replicates": args.replicates, "base_seed": args.seed, "groups": ex.summarise(rows)}
    ex.write_json(args.summary or str(Path(args.out).with_suffix(".json")), summary)
    print(f"wrote {len(rows)} rows to {args.out}")


def cmd_shrink(args):
    x = read_vector(args.input)
    n = x.size
    b = ex.default_b(n) if args.b is None else args.b
    m = args.method.lower()
    if m == "es":
        a = es_estimate(x)
    elif m == "reml":
        a = reml_estimate(x, b)
    elif m.startswith("fixed:"):
        try:
            a = float(m.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"cannot parse fixed a from {args.method!r}") from exc
    else:
        raise InputError("method must be es, reml or fixed:<a>")
    w = shrinkage_weight(x, Hyperparams(a, b))
    rej = half_threshold(w).reject
    rows = [{"index": i + 1, "x": x[i], "weight": w[i], "posterior_mean": w[i] * x[i],
             "reject": bool(rej[i])} for i in range(n)]
    ex.write_csv(args.out, ("index", "x", "weight", "posterior_mean", "reject"), rows)
    print(json.dumps({"a": a, "b": b, "n_rejections": int(rej.sum())}))


def cmd_mcmc(args):
    x = read_vector(args.input)
    n = x.size
    b = ex.default_b(n) if args.b is None else args.b
    prior = APrior.uniform(n) if args.prior == "unif" else APrior.trunc_cauchy(n)
    s = run_chain(x, b, prior, _chain(args))
    rej = s.shrink_weight > 0.5
    rows = [{"index": i + 1, "x": x[i], "post_mean": s.post_mean[i], "post_median": s.post_median[i],
             "shrink_weight": s.shrink_weight[i], "shrink_weight_mcse": s.shrink_weight_mcse[i],
             "reject": bool(rej[i])} for i in range(n)]
    ex.write_csv(args.out, ("index", "x", "post_mean", "post_median", "shrink_weight",
                            "shrink_weight_mcse", "reject"), rows)
    print(json.dumps({"a_mean": s.a_mean, "a_draws_kept": s.a_draws_kept,
                      "mh_accept_rate": s.mh_accept_rate, "omega_final": s.omega_final,
                      "n_rejections": int(rej.sum())}))


def cmd_prostate(args):
    chain = _chain(args)
    table = ex.prostate_pipeline(args.expr, args.labels, args.method, chain, args.alpha_bh, args.b)
    ex.write_csv(args.out, ("gene_id", "z_score", "theta_hat", "selected"), ex.gene_table_rows(table))
    print(json.dumps({"method": table.method, "n_selected": len(table.selected_ids),
                      "a_hat": None if math.isnan(table.a_hat) else table.a_hat}))


def cmd_bounds(args):
    h = Hyperparams(args.a, args.b)
    xs = _range(args.x_grid)
    w = shrinkage_weight(xs, h)
    in_regime = 0 < h.a < 1 and h.b > 0.5
    rows = []
    for x, wi in zip(xs, w):
        row = {"x": x, "shrink_weight": wi, "bound_ew": bound_ew(x, h),
               "pr_kappa_lt_eps": kappa_posterior_cdf(args.eps, x, h),
               "pr_kappa_gt_eta": 1.0 - kappa_posterior_cdf(args.eta, x, h),
               "bound_tail_small": math.nan, "bound_tail_large": math.nan}
        if in_regime:
            row["bound_tail_small"] = bound_tail_small(args.eps, x, h)
            row["bound_tail_large"] = bound_tail_large(args.eta, args.delta, x, h)
        rows.append(row)
    ex.write_csv(args.out, ("x", "shrink_weight", "bound_ew", "pr_kappa_lt_eps", "bound_tail_small",
                            "pr_kappa_gt_eta", "bound_tail_large"), rows)
    summary = {"a": h.a, "b": h.b}
    if in_regime:
        try:
            summary["type1_upper"] = type1_upper_bound(h)
        except DomainError as exc:
            summary["type1_upper"] = None
            summary["type1_upper_note"] = str(exc)
        summary["type1_lower"] = type1_lower_bound(h, args.xi, args.delta)
    if args.p is not None:
        n = args.n
        psi = ex.default_psi(n) if args.psi == "auto" else float(args.psi)
        scheme = AsymptoticScheme.from_two_groups(args.p, psi)
        lo, hi = type2_bounds(scheme, args.rho)
        summary.update(C=scheme.C, type2_lower=lo, type2_upper=hi)
    print(json.dumps(summary))


def build_parser():
    ap = argparse.ArgumentParser(prog="nbpmt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def chain_args(p, iters=10000, burnin=5000):
        p.add_argument("--iters", type=int, default=iters)
        p.add_argument("--burnin", type=int, default=burnin)
        p.add_argument("--thin", type=int, default=1)
        p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("simulate", help="two-groups simulation over a sparsity grid")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--p-grid", default="0.01,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    p.add_argument("--psi", default="auto", help="slab scale, or 'auto' for sqrt(2 log n)")
    p.add_argument("--zeta", type=float, default=0.0)
    p.add_argument("--methods", default="nbp-es,nbp-reml,nbp-unif,nbp-tc,bo,bh")
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--bh-alpha", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="JSON summary path (default: next to --out)")
    chain_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("shrink", help="quadrature shrinkage weights and half-threshold decisions")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="es", help="es, reml or fixed:<a>")
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("mcmc", help="hierarchical Bayes chain with a prior on a")
    p.add_argument("--input", required=True)
    p.add_argument("--prior", choices=("unif", "tc"), default="unif")
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--out", required=True)
    chain_args(p)
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("prostate", help="gene expression pipeline")
    p.add_argument("--expr", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--method", default="nbp-unif")
    p.add_argument("--alpha-bh", type=float, default=0.10)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--out", required=True)
    chain_args(p)
    p.set_defaults(func=cmd_prostate)

    p = sub.add_parser("bounds", help="concentration bounds against quadrature")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--x-grid", default="-5:5:0.1")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--xi", type=float, default=0.25)
    p.add_argument("--p", type=float, default=None, help="signal proportion for the type II bounds")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--psi", default="auto")
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (InputError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
