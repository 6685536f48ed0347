"""Simulation harness, the gene-expression pipeline and result I/O."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .errors import DomainError, InputError, NBPError
from .estimators import EsConfig, RemlConfig, es_estimate, reml_estimate
from .nbp_model import Hyperparams, shrinkage_weight
from .samplers import APrior, ChainSpec, run_chain
from .stats_kernel import RandomStream
from .testing import (TwoGroupsSpec, bh_decisions, compute_metrics, half_threshold,
                      oracle_decisions, two_sided_pvalues)

METHODS = ("NBP-ES", "NBP-REML", "NBP-UNIF", "NBP-TC", "BO", "BH")
COLUMNS = ("p", "method", "replicate", "mp", "fdr", "mse", "n_rejections", "runtime_s",
           "a_hat", "mse_estimator", "error")


def default_b(n: int) -> float:
    return 0.5 + 1.0 / n


def default_psi(n: int) -> float:
    return math.sqrt(2.0 * math.log(n))


def normalise_method(name: str) -> str:
    key = name.strip().upper().replace("_", "-")
    aliases = {"UNIF": "NBP-UNIF", "TC": "NBP-TC", "ES": "NBP-ES", "REML": "NBP-REML"}
    key = aliases.get(key, key)
    if key not in METHODS:
        raise InputError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


@dataclass(frozen=True)
class ExperimentPlan:
    spec: TwoGroupsSpec
    methods: tuple = METHODS
    replicates: int = 20
    base_seed: int = 1
    chain: ChainSpec = field(default_factory=ChainSpec)
    b: float | None = None
    bh_alpha: float | None = None
    p_grid: tuple | None = None
    es: EsConfig = field(default_factory=EsConfig)
    reml: RemlConfig = field(default_factory=RemlConfig)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(normalise_method(m) for m in self.methods))
        if self.replicates < 1:
            raise InputError("replicates must be positive")
        if self.b is not None and not self.b > 0:
            raise InputError("b must be positive")
        if self.bh_alpha is not None and not 0 < self.bh_alpha < 1:
            raise InputError("bh_alpha must lie in (0, 1)")
        if self.p_grid is not None:
            for p in self.p_grid:
                TwoGroupsSpec(self.spec.n, p, self.spec.psi, self.spec.zeta)

    @property
    def b_value(self) -> float:
        return default_b(self.spec.n) if self.b is None else self.b

    @property
    def alpha_value(self) -> float:
        return 1.0 / math.log(self.spec.n) if self.bh_alpha is None else self.bh_alpha

    @property
    def grid(self) -> tuple:
        return (self.spec.p,) if self.p_grid is None else tuple(self.p_grid)


def generate_two_groups(spec: TwoGroupsSpec, stream: RandomStream):
    """Return (x, theta, truth) drawn from the two-groups model."""
    g = stream.generator
    truth = g.random(spec.n) < spec.p
    z = g.standard_normal(spec.n)
    theta = np.where(truth, spec.psi * z, spec.zeta * z)
    x = theta + g.standard_normal(spec.n)
    return x, theta, truth


def oracle_posterior_mean(x, spec: TwoGroupsSpec):
    """E(theta | x) under the generating two-groups model."""
    x = np.asarray(x, dtype=float)
    s1 = 1.0 + spec.psi ** 2
    s0 = 1.0 + spec.zeta ** 2
    logit = (math.log(spec.p / (1.0 - spec.p)) - 0.5 * math.log(s1 / s0)
             - 0.5 * x * x * (1.0 / s1 - 1.0 / s0))
    om = special.expit(logit)
    return om * (spec.psi ** 2 / s1) * x + (1.0 - om) * (spec.zeta ** 2 / s0) * x


def _method_result(method, x, spec, plan, stream):
    """Return (report, estimate, a_hat, estimator label)."""
    b = plan.b_value
    if method in ("NBP-ES", "NBP-REML"):
        if method == "NBP-ES":
            a = es_estimate(x, plan.es)
        else:
            a = reml_estimate(x, b, plan.reml)
        w = shrinkage_weight(x, Hyperparams(a, b), plan.reml.quadrature)
        return half_threshold(w, method=method), w * x, a, "posterior_mean"
    if method in ("NBP-UNIF", "NBP-TC"):
        prior = APrior.uniform(spec.n) if method == "NBP-UNIF" else APrior.trunc_cauchy(spec.n)
        s = run_chain(x, b, prior, plan.chain, stream=stream)
        return half_threshold(s.shrink_weight, method=method), s.post_median, s.a_mean, "posterior_median"
    if method == "BO":
        return oracle_decisions(x, spec), oracle_posterior_mean(x, spec), math.nan, "oracle_posterior_mean"
    rep = bh_decisions(two_sided_pvalues(x), plan.alpha_value)
    return rep, np.where(rep.reject, x, 0.0), math.nan, "hard_threshold"


def run_unit(plan: ExperimentPlan, p_index: int, replicate: int) -> list:
    """All method rows for one (p, replicate) pair on shared data."""
    p = plan.grid[p_index]
    spec = TwoGroupsSpec(plan.spec.n, p, plan.spec.psi, plan.spec.zeta)
    seed = plan.base_seed + replicate
    x, theta, truth = generate_two_groups(spec, RandomStream(seed, (0, p_index)))
    rows = []
    for method in plan.methods:
        t0 = time.perf_counter()
        row = {"p": p, "method": method, "replicate": replicate}
        try:
            stream = RandomStream(seed, (3, p_index, METHODS.index(method)))
            rep, est, a_hat, label = _method_result(method, x, spec, plan, stream)
            met = compute_metrics(rep, truth, est, theta)
            row.update(mp=met.mp, fdr=met.fdr, mse=met.mse, n_rejections=rep.n_rejections,
                       a_hat=a_hat, mse_estimator=label, error="")
        except NBPError as exc:
            row.update(mp=math.nan, fdr=math.nan, mse=math.nan, n_rejections=-1,
                       a_hat=math.nan, mse_estimator="", error=f"{type(exc).__name__}: {exc}")
        row["runtime_s"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def run_experiment(plan: ExperimentPlan) -> list:
    """Rows ordered by p, method, replicate; one per (p, method, replicate)."""
    units = [(i, r) for i in range(len(plan.grid)) for r in range(plan.replicates)]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = [pool.submit(run_unit, plan, i, r) for i, r in units]
            results = [f.result() for f in futures]
    else:
        results = [run_unit(plan, i, r) for i, r in units]
    rows = [row for unit in results for row in unit]
    order = {m: k for k, m in enumerate(plan.methods)}
    p_order = {p: k for k, p in enumerate(plan.grid)}
    rows.sort(key=lambda r: (p_order[r["p"]], order[r["method"]], r["replicate"]))
    return rows


def summarise(rows) -> list:
    """Per (p, method) means and standard errors of the metrics."""
    groups = {}
    for r in rows:
        groups.setdefault((r["p"], r["method"]), []).append(r)
    out = []
    for (p, method), rs in groups.items():
        ok = [r for r in rs if not r["error"]]
        entry = {"p": p, "method": method, "replicates": len(rs), "failures": len(rs) - len(ok)}
        for key in ("mp", "fdr", "mse", "n_rejections", "a_hat"):
            vals = np.array([r[key] for r in ok], dtype=float)
            vals = vals[np.isfinite(vals)]
            entry[f"{key}_mean"] = float(vals.mean()) if vals.size else None
            entry[f"{key}_se"] = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else None
        out.append(entry)
    return out


# --------------------------------------------------------------------------
# t statistics and the gene pipeline

def t_to_z(t_stats, df: int):
    """z_i = Phi^-1(F_t(t_i; df)), computed on the lower tail for accuracy."""
    t = np.asarray(t_stats, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("t statistics must be finite")
    if not df >= 1:
        raise DomainError("df must be at least 1")
    z = -special.ndtri(special.stdtr(df, -np.abs(t)))
    z = np.sign(t) * z
    return float(z) if z.ndim == 0 else z


def two_sample_t(expr, is_case):
    """Pooled-variance t statistics (case mean minus control mean) for each row."""
    expr = np.asarray(expr, dtype=float)
    is_case = np.asarray(is_case, dtype=bool)
    m1 = int((~is_case).sum())
    m2 = int(is_case.sum())
    if m1 < 2 or m2 < 2:
        raise InputError("each group needs at least two samples")
    ctrl = expr[:, ~is_case]
    case = expr[:, is_case]
    df = m1 + m2 - 2
    sp2 = (((ctrl - ctrl.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)
           + ((case - case.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)) / df
    se = np.sqrt(sp2 * (1.0 / m1 + 1.0 / m2))
    diff = case.mean(axis=1) - ctrl.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, diff / se, 0.0)
    bad = np.flatnonzero((se == 0) & (diff != 0))
    if bad.size:
        raise InputError(f"gene row {int(bad[0]) + 1} has zero within-group variance but differing means")
    return t, df


def read_expression_csv(path):
    """Header row of sample names, then one row per gene: gene_id, values..."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path}: need a header row and at least one gene row")
    samples = rows[0][1:]
    if not samples:
        raise InputError(f"{path}: header has no sample columns")
    ids, data = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(samples) + 1:
            raise InputError(f"{path}: row {i} has {len(row)} fields, expected {len(samples) + 1}")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise InputError(f"{path}: row {i}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            bad = next(j for j, v in enumerate(vals) if not math.isfinite(v))
            raise InputError(f"{path}: row {i}, column {bad + 2} is not finite")
        ids.append(row[0])
        data.append(vals)
    return ids, samples, np.array(data)


def read_labels_csv(path):
    """One column of 'control' / 'cancer' labels, optional header."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    vals = [r[-1].strip().lower() for r in rows]
    if vals and vals[0] not in ("control", "cancer"):
        vals = vals[1:]
        start = 2
    else:
        start = 1
    for i, v in enumerate(vals, start=start):
        if v not in ("control", "cancer"):
            raise InputError(f"{path}: row {i} has label {v!r}, expected 'control' or 'cancer'")
    return np.array([v == "cancer" for v in vals], dtype=bool)


@dataclass
class GeneRow:
    gene_id: str
    z_score: float
    theta_hat: float
    selected: bool


@dataclass
class GeneTable:
    rows: list
    method: str
    a_hat: float = math.nan

    @property
    def selected_ids(self) -> set:
        return {r.gene_id for r in self.rows if r.selected}

    def row(self, gene_id) -> GeneRow:
        for r in self.rows:
            if r.gene_id == gene_id:
                return r
        raise KeyError(gene_id)


def select_genes(gene_ids, z, method: str, chain: ChainSpec = ChainSpec(), alpha_bh: float = 0.10,
                 b: float | None = None, stream: RandomStream | None = None) -> GeneTable:
    """Apply one method to z-scores and build the sorted gene table."""
    z = np.asarray(z, dtype=float)
    n = z.size
    if len(gene_ids) != n:
        raise InputError("gene id and z-score counts differ")
    method = normalise_method(method)
    b = default_b(n) if b is None else b
    a_hat = math.nan
    if method == "BH":
        sel = bh_decisions(two_sided_pvalues(z), alpha_bh).reject
        theta = z.copy()
    elif method in ("NBP-UNIF", "NBP-TC"):
        prior = APrior.uniform(n) if method == "NBP-UNIF" else APrior.trunc_cauchy(n)
        s = run_chain(z, b, prior, chain, stream=stream)
        sel = s.shrink_weight > 0.5
        theta = s.post_mean
        a_hat = s.a_mean
    elif method in ("NBP-ES", "NBP-REML"):
        a_hat = es_estimate(z) if method == "NBP-ES" else reml_estimate(z, b)
        w = shrinkage_weight(z, Hyperparams(a_hat, b))
        sel = w > 0.5
        theta = w * z
    else:
        raise InputError(f"method {method} needs known (p, psi) and is not available for real data")
    order = np.argsort(-np.abs(z), kind="stable")
    rows = [GeneRow(str(gene_ids[i]), float(z[i]), float(theta[i]), bool(sel[i])) for i in order]
    return GeneTable(rows, method, a_hat)


def prostate_pipeline(expression_csv, labels_csv, method: str = "NBP-UNIF", chain: ChainSpec = ChainSpec(),
                      alpha_bh: float = 0.10, b: float | None = None) -> GeneTable:
    """Two-sample t statistics -> z-scores -> per-gene selection and effect sizes."""
    ids, samples, expr = read_expression_csv(expression_csv)
    is_case = read_labels_csv(labels_csv)
    if is_case.size != len(samples):
        raise InputError(f"labels file has {is_case.size} labels but the expression file has "
                         f"{len(samples)} sample columns")
    t, df = two_sample_t(expr, is_case)
    z = t_to_z(t, df)
    return select_genes(ids, z, method, chain, alpha_bh, b)


# --------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, columns, rows):
    """UTF-8 CSV with a header and full double precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def write_json(path, obj):
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False, default=float)
        fh.write("\n")


def gene_table_rows(table: GeneTable) -> list:
    return [{"gene_id": r.gene_id, "z_score": r.z_score, "theta_hat": r.theta_hat, "selected": r.selected}
            for r in table.rows]
