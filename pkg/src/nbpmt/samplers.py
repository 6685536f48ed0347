"""Gibbs and Metropolis-within-Gibbs samplers for the NBP posterior.

The chain runs on the reparametrisation s2_i = lambda_i xi_i with
lambda_i ~ G(a, 1) and xi_i ~ IG(b, 1).  Full conditionals:

    lambda_i | rest ~ GIG(theta_i^2 / xi_i, 2, a - 1/2)
    xi_i     | rest ~ IG(b + 1/2, theta_i^2 / (2 lambda_i) + 1)
    theta_i  | rest ~ N((1 - kappa_i) x_i, 1 - kappa_i)

Each coordinate draws from its own random substream keyed by the value of
x_i, so under a fixed a the per-coordinate results do not depend on the
order of the data.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DomainError, InputError, NumericalError
from .nbp_model import Hyperparams
from .stats_kernel import RandomStream, sample_truncated_normal, truncated_normal_log_mass

FIXED, UNIFORM, TRUNC_CAUCHY = "fixed", "uniform", "trunc_cauchy"


@dataclass(frozen=True)
class APrior:
    """Prior on the sparsity shape a: a point mass, uniform, or truncated Cauchy."""

    kind: str
    lo: float
    hi: float
    value: float | None = None

    def __post_init__(self):
        if self.kind not in (FIXED, UNIFORM, TRUNC_CAUCHY):
            raise DomainError(f"unknown prior kind {self.kind!r}")
        if self.kind == FIXED:
            if self.value is None or not 0 < self.value <= 1:
                raise DomainError("a fixed a must lie in (0, 1]")
        elif not 0 < self.lo < self.hi <= 1:
            raise DomainError(f"prior support needs 0 < lo < hi <= 1, got [{self.lo}, {self.hi}]")

    @classmethod
    def fixed(cls, a: float) -> "APrior":
        return cls(FIXED, float(a), float(a), float(a))

    @classmethod
    def uniform(cls, n: int, lo: float | None = None, hi: float = 1.0) -> "APrior":
        return cls(UNIFORM, 1.0 / n if lo is None else float(lo), float(hi))

    @classmethod
    def trunc_cauchy(cls, n: int, lo: float | None = None, hi: float = 1.0) -> "APrior":
        return cls(TRUNC_CAUCHY, 1.0 / n if lo is None else float(lo), float(hi))

    @property
    def is_fixed(self) -> bool:
        return self.kind == FIXED

    def initial(self) -> float:
        return self.value if self.is_fixed else 0.5 * (self.lo + self.hi)

    def log_density_ratio(self, a_new: float, a_old: float) -> float:
        """log pi(a_new) - log pi(a_old) inside the support."""
        if self.kind == TRUNC_CAUCHY:
            return math.log1p(a_old) - math.log1p(a_new)
        return 0.0


@dataclass(frozen=True)
class ChainSpec:
    iterations: int = 10000
    burnin: int = 5000
    thin: int = 1
    seed: int = 0
    omega: float = 0.1
    tune: bool = True
    accept_band: tuple = (0.20, 0.40)
    tune_window: int = 100

    def __post_init__(self):
        if not (self.iterations >= 1 and 1 <= self.burnin < self.iterations):
            raise DomainError("need 1 <= burnin < iterations")
        if self.thin < 1:
            raise DomainError("thin must be at least 1")
        if not self.omega > 0:
            raise DomainError("omega must be positive")
        lo, hi = self.accept_band
        if not 0 <= lo < hi <= 1:
            raise DomainError("accept_band must satisfy 0 <= lo < hi <= 1")
        if self.tune_window < 1:
            raise DomainError("tune_window must be positive")

    @property
    def n_kept(self) -> int:
        return len(range(self.burnin, self.iterations, self.thin))


@dataclass
class ChainState:
    theta: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    a: float

    @property
    def sigma2(self) -> np.ndarray:
        return self.lam * self.xi

    @property
    def kappa(self) -> np.ndarray:
        return 1.0 / (1.0 + self.sigma2)

    def copy(self) -> "ChainState":
        return ChainState(self.theta.copy(), self.lam.copy(), self.xi.copy(), self.a)

    def check(self):
        for name in ("theta", "lam", "xi"):
            v = getattr(self, name)
            if not np.all(np.isfinite(v)):
                raise NumericalError(f"non-finite {name} in chain state")
        if not (np.all(self.lam > 0) and np.all(self.xi > 0)):
            raise NumericalError("lambda and xi must stay positive")


@dataclass
class PosteriorSummary:
    post_mean: np.ndarray
    post_median: np.ndarray
    shrink_weight: np.ndarray
    shrink_weight_mcse: np.ndarray
    a_mean: float
    a_draws_kept: int
    mh_accept_rate: float
    omega_final: float
    a_trace: np.ndarray = field(repr=False, default=None)


def monte_carlo_se(draws, chunk=256):
    """Per-column Monte Carlo standard error of the mean of a (draws, n) array.

    Uses Geyer's initial positive sequence estimate of the integrated
    autocorrelation time.
    """
    draws = np.asarray(draws)
    m, n = draws.shape
    out = np.full(n, np.nan)
    if m < 4:
        return out
    size = 1 << int(math.ceil(math.log2(2 * m)))
    npairs = (m - 1) // 2
    for start in range(0, n, chunk):
        d = draws[:, start:start + chunk].astype(float)
        d = d - d.mean(axis=0)
        f = np.fft.rfft(d, size, axis=0)
        ac = np.fft.irfft(f * np.conj(f), size, axis=0)[:m]
        var0 = ac[0] / m
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = ac / ac[0]
        pairs = rho[0:2 * npairs:2] + rho[1:2 * npairs + 1:2]
        positive = np.cumprod(pairs > 0, axis=0).astype(bool)
        tau = -1.0 + 2.0 * np.where(positive, pairs, 0.0).sum(axis=0)
        tau = np.maximum(tau, 1.0 / m)
        se = np.sqrt(var0 * tau / m)
        out[start:start + chunk] = np.where(ac[0] > 0, se, 0.0)
    return out


def initial_state(x, prior: APrior, theta0=None) -> ChainState:
    n = x.size
    theta = x.copy() if theta0 is None else np.broadcast_to(np.asarray(theta0, dtype=float), (n,)).copy()
    return ChainState(theta, np.ones(n), np.ones(n), prior.initial())


def coordinate_generators(stream: RandomStream, x) -> list:
    """One generator per coordinate, keyed by the bit pattern of x_i and its tie rank."""
    bits = (np.asarray(x, dtype=float) + 0.0).view(np.uint64)
    seen = Counter()
    gens = []
    for v in bits.tolist():
        gens.append(stream.substream(1, v, seen[v]).generator)
        seen[v] += 1
    return gens


def _as_data(x):
    x = np.ascontiguousarray(x, dtype=float).ravel()
    if x.size == 0:
        raise InputError("data must be non-empty")
    if not np.all(np.isfinite(x)):
        raise InputError("data must be finite")
    return x


def lambda_conditional(theta: float, xi: float, a: float) -> tuple[float, float, float]:
    """GIG (c, d, p) parameters of lambda_i given the rest."""
    return theta * theta / xi, 2.0, a - 0.5


def xi_conditional(theta: float, lam: float, b: float) -> tuple[float, float]:
    """Inverse gamma (shape, scale) of xi_i given the rest."""
    return b + 0.5, theta * theta / (2.0 * lam) + 1.0


def theta_conditional(x: float, lam: float, xi: float) -> tuple[float, float]:
    """Normal (mean, variance) of theta_i given the rest."""
    s2 = lam * xi
    w = s2 / (1.0 + s2)
    return w * x, w


def gibbs_step(state: ChainState, x, h: Hyperparams, stream) -> ChainState:
    """One sweep of the lambda, xi and theta conditionals at a = h.a.

    ``stream`` is either a RandomStream (fresh per-coordinate children are
    spawned from it) or a bank built by :func:`make_bank`.
    """
    x = _as_data(x)
    if state.theta.shape != x.shape:
        raise InputError("state and data lengths differ")
    state.check()
    if isinstance(stream, RandomStream):
        bank = kernels.make_bank(stream.generator.spawn(x.size))
    else:
        bank = stream
    new = state.copy()
    new.a = h.a
    w = np.empty(x.size)
    _, bad = kernels.gibbs_sweep(bank, x, new.theta, new.lam, new.xi, w, h.a, h.b)
    if bad >= 0:
        raise NumericalError(f"non-finite draw at coordinate {bad}")
    return new


def make_bank(stream: RandomStream, x):
    return kernels.make_bank(coordinate_generators(stream, _as_data(x)))


def log_acceptance_ratio_a(a: float, a_star: float, sum_log_w: float, n: int, b: float,
                           prior: APrior, omega: float) -> float:
    """log MH ratio for a -> a_star given S = sum_i log(s2_i / (1 + s2_i))."""
    lg = math.lgamma
    out = n * (lg(a_star + b) - lg(a_star) - lg(a + b) + lg(a))
    out += (a_star - a) * sum_log_w
    # truncated-normal proposal correction: q(a | a*) / q(a* | a) = Z(a) / Z(a*)
    out += truncated_normal_log_mass(a, omega, prior.lo, prior.hi)
    out -= truncated_normal_log_mass(a_star, omega, prior.lo, prior.hi)
    out += prior.log_density_ratio(a_star, a)
    return out


def _mh_core(a, sum_log_w, n, b, prior, omega, stream):
    a_star = sample_truncated_normal(stream, a, omega, prior.lo, prior.hi)
    lr = log_acceptance_ratio_a(a, a_star, sum_log_w, n, b, prior, omega)
    u = stream.uniform()
    if lr >= 0.0 or u == 0.0 or math.log(u) < lr:
        return a_star, True
    return a, False


def mh_update_a(state: ChainState, prior: APrior, b: float, omega: float,
                stream: RandomStream) -> tuple[float, bool]:
    if prior.is_fixed:
        raise DomainError("mh_update_a needs a uniform or truncated Cauchy prior")
    if not omega > 0:
        raise DomainError("omega must be positive")
    if not prior.lo <= state.a <= prior.hi:
        raise DomainError("current a lies outside the prior support")
    s2 = state.sigma2
    sum_log_w = float(-np.log1p(1.0 / s2).sum())
    return _mh_core(state.a, sum_log_w, s2.size, b, prior, omega, stream)


def tune_omega(history, omega: float, band=(0.20, 0.40)) -> float:
    """Scale the proposal sd toward the acceptance band, within [1e-4, 1]."""
    h = np.asarray(history, dtype=float)
    if h.size:
        rate = float(h.mean())
        if rate > band[1]:
            omega *= 1.1
        elif rate < band[0]:
            omega /= 1.1
    return min(1.0, max(1e-4, omega))


def run_chain(x, b: float, prior: APrior, spec: ChainSpec = ChainSpec(),
              theta0=None, stream: RandomStream | None = None) -> PosteriorSummary:
    """Run the sampler and summarise the kept draws.

    Per sweep: lambda, xi and theta for every coordinate, then a by a
    Metropolis step when a is not fixed.  The proposal sd is tuned only
    during burn-in.
    """
    x = _as_data(x)
    if not (b > 0 and math.isfinite(b)):
        raise DomainError("b must be positive")
    n = x.size
    base = stream if stream is not None else RandomStream(spec.seed)
    bank = kernels.make_bank(coordinate_generators(base, x))
    astream = base.substream(2)
    st = initial_state(x, prior, theta0)
    if not np.all(np.isfinite(st.theta)):
        raise InputError("initial theta must be finite")
    theta, lam, xi = st.theta, st.lam, st.xi
    w = np.empty(n)
    a = st.a
    omega = spec.omega

    n_kept = spec.n_kept
    draws = np.empty((n_kept, n), dtype=np.float32)
    sum_w = np.zeros(n)
    w_draws = np.empty((n_kept, n), dtype=np.float32)
    a_trace = np.empty(n_kept)
    window = []
    post_acc = 0
    post_prop = 0
    k = 0
    for it in range(spec.iterations):
        sum_log_w, bad = kernels.gibbs_sweep(bank, x, theta, lam, xi, w, a, b)
        if bad >= 0:
            raise NumericalError(f"non-finite draw at coordinate {bad}, iteration {it}")
        if not prior.is_fixed:
            a, acc = _mh_core(a, sum_log_w, n, b, prior, omega, astream)
            if it < spec.burnin:
                if spec.tune:
                    window.append(acc)
                    if len(window) == spec.tune_window:
                        omega = tune_omega(window, omega, spec.accept_band)
                        window = []
            else:
                post_acc += acc
                post_prop += 1
        if it >= spec.burnin and (it - spec.burnin) % spec.thin == 0:
            draws[k] = theta
            sum_w += w
            w_draws[k] = w
            a_trace[k] = a
            k += 1

    # Rao-Blackwellised: E(theta_i | rest) = w_i x_i, so the posterior mean is x_i E(w_i | data)
    post_mean = (sum_w / n_kept) * x
    shrink = sum_w / n_kept
    mid = (n_kept + 1) // 2 - 1
    post_median = np.partition(draws, mid, axis=0)[mid].astype(float)
    mcse = monte_carlo_se(w_draws)
    rate = 1.0 if prior.is_fixed else post_acc / max(1, post_prop)
    return PosteriorSummary(
        post_mean=post_mean,
        post_median=post_median,
        shrink_weight=shrink,
        shrink_weight_mcse=mcse,
        a_mean=float(a_trace.mean()),
        a_draws_kept=n_kept,
        mh_accept_rate=float(rate),
        omega_final=float(omega),
        a_trace=a_trace,
    )


__all__ = [
    "APrior", "ChainSpec", "ChainState", "PosteriorSummary", "initial_state",
    "coordinate_generators", "make_bank", "lambda_conditional", "xi_conditional",
    "theta_conditional", "gibbs_step", "log_acceptance_ratio_a", "mh_update_a",
    "tune_omega", "run_chain",
]
