"""Decision rules and their evaluation against known truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError


@dataclass(frozen=True)
class TwoGroupsSpec:
    """theta_i ~ (1-p) N(0, zeta^2) + p N(0, psi^2), x_i = theta_i + N(0, 1)."""

    n: int
    p: float
    psi: float
    zeta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not (self.psi > self.zeta >= 0):
            raise DomainError("need psi > zeta >= 0")

    @property
    def u(self) -> float:
        return (self.psi / (self.zeta + 1.0)) ** 2

    @property
    def f(self) -> float:
        return (1.0 - self.p) / self.p


@dataclass
class DecisionReport:
    reject: np.ndarray
    n_rejections: int
    method: str

    @classmethod
    def from_mask(cls, mask, method: str) -> "DecisionReport":
        mask = np.asarray(mask, dtype=bool)
        return cls(mask, int(mask.sum()), method)


@dataclass(frozen=True)
class Metrics:
    mp: float
    fdr: float
    mse: float


def half_threshold(weights, alpha: float = 0.5, method: str = "half-threshold") -> DecisionReport:
    """Reject H0_i when the shrinkage weight strictly exceeds alpha."""
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    return DecisionReport.from_mask(w > alpha, method)


def oracle_threshold(spec: TwoGroupsSpec) -> float:
    """c^2 = ((1+u)/u) (log(1+u) + 2 log f), with u = (psi/(zeta+1))^2."""
    u = spec.u
    return (1.0 + u) / u * (math.log1p(u) + 2.0 * math.log(spec.f))


def oracle_decisions(x, spec: TwoGroupsSpec) -> DecisionReport:
    x = np.asarray(x, dtype=float)
    return DecisionReport.from_mask(x * x > oracle_threshold(spec), "BO")


def oracle_risk(n: int, p: float, C: float) -> float:
    """Leading-order Bayes Oracle risk n p (2 Phi(sqrt C) - 1)."""
    if not C > 0:
        raise DomainError("C must be positive")
    return n * p * float(special.erf(math.sqrt(C / 2.0)))


def two_sided_pvalues(x):
    x = np.asarray(x, dtype=float)
    return 2.0 * special.ndtr(-np.abs(x))


def bh_decisions(pvalues, alpha: float) -> DecisionReport:
    """Benjamini-Hochberg step-up at level alpha."""
    pv = np.asarray(pvalues, dtype=float)
    if not np.all((pv >= 0) & (pv <= 1)):
        raise DomainError("p-values must lie in [0, 1]")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    n = pv.size
    if n == 0:
        return DecisionReport.from_mask(np.zeros(0, dtype=bool), "BH")
    srt = np.sort(pv)
    ok = np.flatnonzero(srt <= alpha * np.arange(1, n + 1) / n)
    if ok.size == 0:
        return DecisionReport.from_mask(np.zeros(n, dtype=bool), "BH")
    cutoff = srt[ok[-1]]
    # every p-value tied with the cutoff is rejected along with it
    return DecisionReport.from_mask(pv <= cutoff, "BH")


def inclusion_prob(x, p: float, psi: float):
    """Posterior probability that x came from the slab, for known (p, psi)."""
    if not (0 < p < 1 and psi > 0):
        raise DomainError("need p in (0, 1) and psi > 0")
    xa = np.asarray(x, dtype=float)
    s = psi * psi
    logit = 0.5 * xa * xa * s / (1.0 + s) - math.log((1.0 - p) / p) - 0.5 * math.log1p(s)
    out = special.expit(logit)
    return float(out) if out.ndim == 0 else out


def compute_metrics(report: DecisionReport, truth, estimate, theta_true) -> Metrics:
    rej = np.asarray(report.reject, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    est = np.asarray(estimate, dtype=float)
    th = np.asarray(theta_true, dtype=float)
    n = rej.size
    if not (truth.size == n and est.size == n and th.size == n):
        raise DomainError("decision, truth, estimate and theta vectors must share one length")
    if n == 0:
        raise DomainError("metrics need at least one coordinate")
    fp = int(np.count_nonzero(rej & ~truth))
    fn = int(np.count_nonzero(~rej & truth))
    r = int(rej.sum())
    return Metrics(mp=(fp + fn) / n, fdr=fp / max(1, r), mse=float(np.mean((est - th) ** 2)))
