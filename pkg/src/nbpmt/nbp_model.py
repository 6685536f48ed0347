"""Analytic core of the normal-beta prime prior.

theta | s2 ~ N(0, s2),  s2 ~ BetaPrime(a, b).  With kappa = 1/(1 + s2) the
posterior of kappa given one observation x is

    pi(kappa | x)  propto  exp(-kappa x^2/2) kappa^(b-1/2) (1-kappa)^(a-1),

and every quantity here reduces to integrals of the form

    I(t; alpha, beta) = int_0^1 exp(-kappa t) kappa^(alpha-1) (1-kappa)^(beta-1) dkappa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._backend import kernels
from .errors import DomainError, QuadratureError
from .stats_kernel import QuadratureSpec, integrate, log_gamma, normal_cdf

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class Hyperparams:
    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def for_testing(cls, a: float, b: float, n: int) -> "Hyperparams":
        """Hyperparameters in the testing regime: a in [1/n, 1], b > 1/2."""
        if n < 1:
            raise DomainError("n must be a positive integer")
        h = cls(a, b)
        if not (1.0 / n <= h.a <= 1.0):
            raise DomainError(f"a must lie in [1/n, 1] = [{1.0 / n:.6g}, 1], got {h.a}")
        if not h.b > 0.5:
            raise DomainError(f"b must exceed 1/2, got {h.b}")
        return h

    def log_beta_norm(self) -> float:
        """log Gamma(a+b) - log Gamma(a) - log Gamma(b)."""
        return log_gamma(self.a + self.b) - log_gamma(self.a) - log_gamma(self.b)


@dataclass(frozen=True)
class AsymptoticScheme:
    u: float
    v: float
    C: float

    def __post_init__(self):
        if not (self.u > 0 and self.v > 0 and self.C > 0):
            raise DomainError("scheme needs u > 0, v > 0 and C > 0")

    @classmethod
    def from_two_groups(cls, p: float, psi: float, zeta: float = 0.0) -> "AsymptoticScheme":
        if not 0 < p < 1:
            raise DomainError("p must lie in (0, 1)")
        if not (psi > 0 and zeta >= 0):
            raise DomainError("need psi > 0 and zeta >= 0")
        u = (psi / (zeta + 1.0)) ** 2
        f = (1.0 - p) / p
        v = u * f * f
        C = math.log(v) / u
        if not C > 0:
            raise DomainError(f"plug-in C = log(v)/u = {C:.4g} is not positive")
        return cls(u, v, C)


def _check_regime(h: Hyperparams):
    if not (0 < h.a < 1 and h.b > 0.5):
        raise DomainError("bound needs a in (0, 1) and b > 1/2")


def _open_unit(name, v):
    if not 0 < v < 1:
        raise DomainError(f"{name} must lie in (0, 1), got {v}")


# --------------------------------------------------------------------------
# densities

def beta_prime_log_pdf(sigma2, h: Hyperparams):
    s = np.asarray(sigma2, dtype=float)
    if not np.all(s > 0):
        raise DomainError("sigma2 must be positive")
    out = h.log_beta_norm() + (h.a - 1.0) * np.log(s) - (h.a + h.b) * np.log1p(s)
    return float(out) if out.ndim == 0 else out


def kappa_log_posterior_unnorm(kappa, x, h: Hyperparams):
    k = np.asarray(kappa, dtype=float)
    if not np.all((k > 0) & (k < 1)):
        raise DomainError("kappa must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    out = -0.5 * k * x * x + (h.b - 0.5) * np.log(k) + (h.a - 1.0) * np.log1p(-k)
    return float(out) if out.ndim == 0 else out


def log_kappa_integral(t, alpha: float, beta: float, spec: QuadratureSpec = _DEFAULT_QUAD):
    """log I(t; alpha, beta) for an array of t >= 0 (compiled kernel when available)."""
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    if flat.size and not np.all(np.isfinite(flat) & (flat >= 0)):
        raise DomainError("t must be finite and non-negative")
    vals, relerr, ok = kernels.log_kappa_integrals(
        flat, float(alpha), float(beta), spec.rel_tol, int(spec.max_subdivisions))
    if not np.all(ok):
        i = int(np.flatnonzero(~ok)[0])
        raise QuadratureError(
            f"kappa integral did not converge at t={flat[i]:.6g} (relative error {relerr[i]:.3g})",
            float(vals[i]), float(relerr[i]))
    return vals.reshape(t.shape)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def shrinkage_weight(x, h: Hyperparams, spec: QuadratureSpec = _DEFAULT_QUAD):
    """Posterior mean of 1 - kappa given x, so that E(theta | x) = weight * x."""
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    t = 0.5 * xa * xa
    alpha = h.b + 0.5
    logd = log_kappa_integral(t, alpha, h.a, spec)
    logn = log_kappa_integral(t, alpha, h.a + 1.0, spec)
    w = np.exp(logn - logd)
    w = np.clip(w, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return _scalar_or_array(x, w)


def marginal_log_density(x, h: Hyperparams, spec: QuadratureSpec = _DEFAULT_QUAD):
    """log m(x) with m(x) = B(a,b)^-1 int_0^1 sqrt(kappa/2pi) e^(-kappa x^2/2) kappa^(b-1) (1-kappa)^(a-1)."""
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    logi = log_kappa_integral(0.5 * xa * xa, h.b + 0.5, h.a, spec)
    return _scalar_or_array(x, h.log_beta_norm() - LOG_SQRT_2PI + logi)


def _kappa_mass(lo, hi, t, h, spec):
    # int_lo^hi exp(-k t) k^(b-1/2) (1-k)^(a-1) dk by the generic integrator, split at 1/2
    alpha, beta = h.b + 0.5, h.a
    total = 0.0
    if lo < 0.5:
        top = min(hi, 0.5)

        def left(s):
            k = s ** (1.0 / alpha)
            return np.exp(-k * t) * (1.0 - k) ** (beta - 1.0) / alpha

        total += integrate(left, lo ** alpha, top ** alpha, spec)[0]
    if hi > 0.5:
        bot = max(lo, 0.5)

        def right(u):
            k = 1.0 - u ** (1.0 / beta)
            return np.exp(-k * t) * k ** (alpha - 1.0) / beta

        total += integrate(right, (1.0 - hi) ** beta, (1.0 - bot) ** beta, spec)[0]
    return total


def kappa_posterior_cdf(eps: float, x: float, h: Hyperparams, spec: QuadratureSpec = _DEFAULT_QUAD) -> float:
    """Pr(kappa < eps | x), computed independently of the compiled kernel."""
    if not 0 <= eps <= 1:
        raise DomainError("eps must lie in [0, 1]")
    t = 0.5 * float(x) ** 2
    num = _kappa_mass(0.0, eps, t, h, spec)
    den = _kappa_mass(0.0, 1.0, t, h, spec)
    return min(1.0, max(0.0, num / den))


def marginal_prior_log_density(theta: float, h: Hyperparams, spec: QuadratureSpec = _DEFAULT_QUAD) -> float:
    """log pi(theta) from the lambda-mixture representation.

    pi(theta) = Gamma(b+1/2) / (Gamma(a) Gamma(b) sqrt(2 pi))
                * int_0^inf lambda^(a-3/2) e^(-lambda) (1 + theta^2/(2 lambda))^-(b+1/2) dlambda,
    integrated in u = log(lambda).  Diverges at theta = 0 when a <= 1/2.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError("theta must be finite")
    a, b = h.a, h.b
    q = 0.5 * theta * theta
    if q == 0.0:
        if a <= 0.5:
            raise DomainError("the marginal prior has a singularity at theta = 0 when a <= 1/2")
        lo = -60.0 / (a - 0.5)
    else:
        lo = math.log(q) - 60.0 / (a + b)
    hi = math.log(800.0)

    def logg(u):
        u = np.asarray(u, dtype=float)
        lam = np.exp(u)
        val = (a - 0.5) * u - lam
        if q > 0.0:
            val = val - (b + 0.5) * np.log1p(q / lam)
        return val

    grid = np.linspace(lo, hi, 801)
    m = float(np.max(logg(grid)))
    bps = [math.log(q)] if q > 0.0 else []
    val, _ = integrate(lambda u: np.exp(logg(u) - m), lo, hi, spec, breakpoints=bps + [0.0])
    const = log_gamma(b + 0.5) - log_gamma(a) - log_gamma(b) - LOG_SQRT_2PI
    return const + m + math.log(val)


# --------------------------------------------------------------------------
# concentration and error-probability bounds

def bound_ew(x, h: Hyperparams):
    """Upper bound e^(x^2/2) a/(a+b+1/2) on the shrinkage weight."""
    xa = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = np.exp(0.5 * xa * xa) * h.a / (h.a + h.b + 0.5)
    return _scalar_or_array(x, out)


def bound_tail_small(eps: float, x, h: Hyperparams):
    """Upper bound on Pr(kappa < eps | x)."""
    _check_regime(h)
    _open_unit("eps", eps)
    xa = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = np.exp(0.5 * xa * xa) * h.a * eps / ((h.b + 0.5) * (1.0 - eps))
    return _scalar_or_array(x, out)


def bound_tail_large(eta: float, delta: float, x, h: Hyperparams):
    """Upper bound on Pr(kappa > eta | x)."""
    _check_regime(h)
    _open_unit("eta", eta)
    _open_unit("delta", delta)
    a, b = h.a, h.b
    xa = np.asarray(x, dtype=float)
    pre = (b + 0.5) * (1.0 - eta) ** a / (a * (eta * delta) ** (b + 0.5))
    out = pre * np.exp(-eta * (1.0 - delta) * 0.5 * xa * xa)
    return _scalar_or_array(x, out)


def type1_upper_bound(h: Hyperparams) -> float:
    _check_regime(h)
    a, b = h.a, h.b
    arg = (a + b + 0.5) / (2.0 * a)
    if not arg > 1.0:
        raise DomainError(f"log argument (a+b+1/2)/(2a) = {arg:.4g} must exceed 1")
    return 2.0 * math.sqrt(2.0) * a / (math.sqrt(math.pi) * (a + b + 0.5)) / math.sqrt(math.log(arg))


def type1_lower_bound(h: Hyperparams, xi: float, delta: float) -> float:
    _check_regime(h)
    if not 0 < xi < 0.5:
        raise DomainError("xi must lie in (0, 1/2)")
    _open_unit("delta", delta)
    a, b = h.a, h.b
    lg = math.log(b + 0.5) + a * math.log1p(-xi) - math.log(a) - (b + 0.5) * math.log(xi * delta)
    if lg <= 0.0:
        return 0.0
    return 1.0 - normal_cdf(math.sqrt(2.0 * lg / (xi * (1.0 - delta))))


def type2_bounds(scheme: AsymptoticScheme, rho: float) -> tuple[float, float]:
    """(lower, upper) asymptotic bounds on the type II error probability.

    ``rho = 2`` is the sharp limit where both bounds coincide.
    """
    if not rho >= 2.0:
        raise DomainError(f"rho must be at least 2, got {rho}")
    C = scheme.C
    lower = float(special.erf(math.sqrt(C) / math.sqrt(2.0)))
    upper = float(special.erf(math.sqrt(rho * C / 2.0) / math.sqrt(2.0)))
    return lower, upper
