import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbpmt.errors import DomainError
from nbpmt.estimators import es_estimate
from nbpmt.experiments import ExperimentPlan, generate_two_groups, run_experiment
from nbpmt.nbp_model import Hyperparams, shrinkage_weight
from nbpmt.samplers import APrior, ChainSpec, run_chain
from nbpmt.stats_kernel import RandomStream
from nbpmt.testing import (DecisionReport, TwoGroupsSpec, bh_decisions, compute_metrics, half_threshold,
                           inclusion_prob, oracle_decisions, oracle_risk, oracle_threshold,
                           two_sided_pvalues)


def test_spec_validation():
    s = TwoGroupsSpec(10, 0.2, 3.0, 0.5)
    assert s.u == pytest.approx(4.0) and s.f == pytest.approx(4.0)
    for kw in ({"p": 0.0}, {"p": 1.0}, {"psi": 0.1, "zeta": 0.2}, {"n": 0}):
        args = dict(n=10, p=0.2, psi=3.0, zeta=0.0)
        args.update(kw)
        with pytest.raises(DomainError):
            TwoGroupsSpec(**args)


def test_half_threshold():
    r = half_threshold([0.6, 0.4, 0.5])
    assert r.reject.tolist() == [True, False, False] and r.n_rejections == 1
    assert half_threshold([0.01, 0.2], alpha=1e-9).n_rejections == 2
    with pytest.raises(DomainError):
        half_threshold([0.2, math.nan])
    s = run_chain(np.array([8.0]), 0.502, APrior.fixed(0.1), ChainSpec(seed=1))
    assert half_threshold(s.shrink_weight).reject.tolist() == [True]


def test_oracle_threshold_and_decisions():
    assert oracle_threshold(TwoGroupsSpec(10, 0.5, math.sqrt(3))) == pytest.approx(4 / 3 * math.log(4), abs=1e-12)
    assert oracle_threshold(TwoGroupsSpec(10, 0.2, 3.53)) == pytest.approx(5.803516744001873, rel=1e-12)
    assert oracle_threshold(TwoGroupsSpec(10, 0.1, 3.53)) > oracle_threshold(TwoGroupsSpec(10, 0.2, 3.53))
    spec = TwoGroupsSpec(6, 0.2, 3.53)
    assert oracle_decisions(np.zeros(6), spec).n_rejections == 0
    x = np.array([-3.0, 2.5, 2.4, 0.1, -2.41, 9.0])
    assert np.array_equal(oracle_decisions(x, spec).reject, oracle_decisions(-x, spec).reject)
    assert oracle_decisions(x, spec).reject.tolist() == [True, True, False, False, True, True]
    assert oracle_decisions(x, TwoGroupsSpec(6, 1e-300, 3.53)).n_rejections == 0


def test_oracle_risk():
    assert oracle_risk(500, 0.05, 2.0) == pytest.approx(25 * 0.8427007929497149, rel=1e-12)
    assert oracle_risk(500, 0.05, 1e6) == pytest.approx(25.0)
    assert oracle_risk(500, 0.05, 1e-12) < 1e-4
    with pytest.raises(DomainError):
        oracle_risk(500, 0.05, 0.0)


def test_bh_examples():
    r = bh_decisions([0.001, 0.013, 0.04, 0.3, 0.9], 0.1)
    assert r.n_rejections == 3 and r.reject.tolist() == [True, True, True, False, False]
    assert bh_decisions(np.ones(7), 0.1).n_rejections == 0
    assert bh_decisions([], 0.1).n_rejections == 0
    # ties at the cutoff are rejected together
    assert bh_decisions([0.04, 0.04, 0.04, 0.5], 0.1).n_rejections == 3
    with pytest.raises(DomainError):
        bh_decisions([1.2], 0.1)
    with pytest.raises(DomainError):
        bh_decisions([0.2], 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.001, 0.01, 0.03, 0.05, 0.2, 1.0]) | st.floats(0, 1), max_size=20),
       st.randoms(use_true_random=False))
def test_bh_monotone_and_permutation(ps, rnd):
    p = np.array(ps, dtype=float)
    lo = bh_decisions(p, 0.05).reject
    hi = bh_decisions(p, 0.10).reject
    assert np.all(hi[lo])
    perm = list(range(p.size))
    rnd.shuffle(perm)
    assert np.array_equal(bh_decisions(p[perm], 0.1).reject, hi[perm])


def test_two_sided_pvalues():
    assert two_sided_pvalues([0.0])[0] == 1.0
    assert two_sided_pvalues([1.959963984540054])[0] == pytest.approx(0.05, rel=1e-12)
    assert two_sided_pvalues([-30.0])[0] > 0


def test_inclusion_prob():
    assert inclusion_prob(0.0, 0.5, math.sqrt(3)) == pytest.approx(1 / 3, rel=1e-14)
    assert inclusion_prob(40.0, 0.01, 3.0) == pytest.approx(1.0)
    xs = np.linspace(0, 6, 30)
    assert np.all(np.diff(inclusion_prob(xs, 0.1, 3.0)) > 0)
    assert inclusion_prob(1.0, 0.3, 3.0) > inclusion_prob(1.0, 0.2, 3.0)
    # direct formula
    p, psi, x = 0.2, 2.0, 1.3
    want = 1 / ((1 - p) / p * math.sqrt(1 + psi ** 2) * math.exp(-x * x / 2 * psi ** 2 / (1 + psi ** 2)) + 1)
    assert inclusion_prob(x, p, psi) == pytest.approx(want, rel=1e-14)


def test_metrics():
    truth = np.array([1, 1, 1, 0, 0, 0, 0], dtype=bool)
    rej = np.array([1, 1, 1, 1, 1, 0, 0], dtype=bool)
    m = compute_metrics(DecisionReport.from_mask(rej, "x"), truth, np.zeros(7), np.zeros(7))
    assert m.fdr == pytest.approx(0.4) and m.mp == pytest.approx(2 / 7) and m.mse == 0.0
    m = compute_metrics(DecisionReport.from_mask(np.zeros(7, bool), "x"), truth, np.ones(7), np.zeros(7))
    assert m.fdr == 0.0 and m.mp == pytest.approx(3 / 7) and m.mse == 1.0
    assert compute_metrics(DecisionReport.from_mask(truth, "x"), truth, np.zeros(7), np.zeros(7)).mp == 0.0
    with pytest.raises(DomainError):
        compute_metrics(DecisionReport.from_mask(rej, "x"), truth[:3], np.zeros(7), np.zeros(7))


def test_weight_close_to_inclusion_prob():
    spec = TwoGroupsSpec(500, 0.05, 3.53)
    gaps = []
    for r in range(5):
        x, _, _ = generate_two_groups(spec, RandomStream(1 + r, (0, 0)))
        w = shrinkage_weight(x, Hyperparams(es_estimate(x), 0.5 + 1 / 500))
        gaps.append(np.mean(np.abs(w - inclusion_prob(x, spec.p, spec.psi))))
    assert max(gaps) <= 0.15


@pytest.mark.slow
def test_oracle_has_smallest_mp():
    plan = ExperimentPlan(TwoGroupsSpec(500, 0.2, 3.53), replicates=20, base_seed=1,
                          chain=ChainSpec(iterations=2000, burnin=1000, seed=0))
    rows = run_experiment(plan)
    mean = {m: np.mean([r["mp"] for r in rows if r["method"] == m]) for m in plan.methods}
    assert all(mean["BO"] <= v for v in mean.values())
