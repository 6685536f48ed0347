"""Special functions, seeded random variates and 1-D adaptive quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _quad
from ._backend import kernels
from .errors import DomainError, QuadratureError

_U64 = 2 ** 64


class RandomStream:
    """Deterministic PCG64 stream addressed by ``(seed, key)``.

    Streams with the same seed and different keys are statistically
    independent (numpy ``SeedSequence`` spawn keys), so per-coordinate or
    per-replicate substreams never overlap.
    """

    def __init__(self, seed: int, key: tuple = ()):
        if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
            raise DomainError(f"seed must be an integer, got {seed!r}")
        seed = int(seed)
        if not 0 <= seed < _U64:
            raise DomainError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        self.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.key)))

    def substream(self, *key) -> "RandomStream":
        return RandomStream(self.seed, self.key + tuple(key))

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, key={self.key})"


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 1000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be a positive integer")


# --------------------------------------------------------------------------
# special functions

def _finite(x, name):
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any():
        raise DomainError(f"{name} must not be NaN")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def log_gamma(x):
    arr = _finite(x, "x")
    if (arr <= 0).any() or np.isinf(arr).any():
        raise DomainError("log_gamma needs a finite positive argument")
    return _out(special.gammaln(arr))


def normal_cdf(x):
    return _out(special.ndtr(_finite(x, "x")))


def normal_pdf(x):
    arr = _finite(x, "x")
    return _out(np.exp(-0.5 * arr * arr) / math.sqrt(2.0 * math.pi))


def normal_quantile(q):
    arr = _finite(q, "q")
    if ((arr <= 0) | (arr >= 1)).any():
        raise DomainError("normal_quantile needs q strictly inside (0, 1)")
    return _out(special.ndtri(arr))


def student_t_cdf(t, df):
    if not np.all(np.asarray(df, dtype=float) >= 1):
        raise DomainError("degrees of freedom must be at least 1")
    return _out(special.stdtr(df, _finite(t, "t")))


# --------------------------------------------------------------------------
# random variates

def check_gig(c, d, p):
    if not all(math.isfinite(v) for v in (c, d, p)):
        raise DomainError("GIG parameters must be finite")
    if c < 0 or d < 0:
        raise DomainError("GIG needs c >= 0 and d >= 0")
    if c == 0 and d == 0:
        raise DomainError("GIG needs c > 0 or d > 0")
    if c == 0 and not p > 0:
        raise DomainError("GIG with c = 0 needs p > 0")
    if d == 0 and not p < 0:
        raise DomainError("GIG with d = 0 needs p < 0")


def sample_gig(stream: RandomStream, c: float, d: float, p: float, size=None):
    """Draw from the density proportional to x^(p-1) exp(-(c/x + d x)/2).

    ``c = 0`` reduces to Gamma(p, rate d/2) and ``d = 0`` to
    InverseGamma(-p, scale c/2); both are drawn directly.
    """
    c, d, p = float(c), float(d), float(p)
    check_gig(c, d, p)
    if size is None:
        return float(kernels.sample_gig_core(stream.generator, c, d, p))
    return kernels.gig_draws(stream.generator, c, d, p, int(np.prod(size))).reshape(size)


def sample_inverse_gamma(stream: RandomStream, shape: float, scale: float, size=None):
    if not (shape > 0 and scale > 0 and math.isfinite(shape) and math.isfinite(scale)):
        raise DomainError("inverse gamma needs positive finite shape and scale")
    return scale / stream.generator.standard_gamma(shape, size)


def _log_diff_exp(la, lb):
    # log(exp(la) - exp(lb)) for la >= lb
    if lb == -math.inf:
        return la
    return la + math.log(-math.expm1(lb - la))


def truncated_normal_log_mass(mean, sd, lo, hi):
    """log P(lo <= X <= hi) for X ~ N(mean, sd^2), accurate in both tails."""
    al = (lo - mean) / sd
    be = (hi - mean) / sd
    if al >= 0:
        return _log_diff_exp(float(special.log_ndtr(-al)), float(special.log_ndtr(-be)))
    if be <= 0:
        return _log_diff_exp(float(special.log_ndtr(be)), float(special.log_ndtr(al)))
    return math.log(float(special.ndtr(be) - special.ndtr(al)))


def _upper_tail_draw(u, al, be):
    # inverse CDF on [al, be] with al >= 0, using survival functions in log space
    la = float(special.log_ndtr(-al))
    lb = float(special.log_ndtr(-be))
    target = la + math.log1p(-u * -math.expm1(lb - la))
    return -float(special.ndtri_exp(target))


def sample_truncated_normal(stream: RandomStream, mean: float, sd: float, lo: float, hi: float) -> float:
    """Inverse-CDF draw from N(mean, sd^2) restricted to [lo, hi]."""
    if not sd > 0:
        raise DomainError("sd must be positive")
    if not lo < hi:
        raise DomainError("truncation needs lo < hi")
    u = stream.generator.random()
    al = (lo - mean) / sd
    be = (hi - mean) / sd
    if al >= 0:
        z = _upper_tail_draw(u, al, be)
    elif be <= 0:
        z = -_upper_tail_draw(u, -be, -al)
    else:
        pa = float(special.ndtr(al))
        pb = float(special.ndtr(be))
        z = float(special.ndtri(pa + u * (pb - pa)))
    return min(hi, max(lo, mean + sd * z))


# --------------------------------------------------------------------------
# quadrature

def _vectorised(f):
    probe = np.array([0.25, 0.5])

    def g(z):
        return np.asarray(f(z), dtype=float)

    try:
        if np.shape(g(probe)) == probe.shape:
            return g
    except Exception:
        pass
    vf = np.vectorize(lambda v: float(f(float(v))), otypes=[float])
    return vf


def integrate(f, lo: float, hi: float, spec: QuadratureSpec = QuadratureSpec(), breakpoints=None):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``(lo, hi)``.

    Infinite limits are mapped onto a finite interval.  ``f`` may be
    vectorised; scalar functions are wrapped.  Returns ``(value, err_est)``
    or raises ``QuadratureError`` carrying the best estimate.
    """
    lo, hi = float(lo), float(hi)
    if math.isnan(lo) or math.isnan(hi):
        raise DomainError("integration limits must not be NaN")
    if lo == hi:
        return 0.0, 0.0
    if lo > hi:
        v, e = integrate(f, hi, lo, spec, breakpoints)
        return -v, e
    g = _vectorised(f)
    if math.isinf(lo) and math.isinf(hi):
        v1, e1 = integrate(f, -math.inf, 0.0, spec)
        v2, e2 = integrate(f, 0.0, math.inf, spec)
        return v1 + v2, e1 + e2
    if math.isinf(hi):
        def h(tau):
            return g(lo + (1.0 - tau) / tau) / (tau * tau)
        bps = [0.0, 1.0]
    elif math.isinf(lo):
        def h(tau):
            return g(hi - (1.0 - tau) / tau) / (tau * tau)
        bps = [0.0, 1.0]
    else:
        h = g
        inner = sorted(float(b) for b in (breakpoints or []) if lo < b < hi)
        bps = [lo] + inner + [hi]
    value, err, ok = _quad.adaptive(h, bps, spec.abs_tol, spec.rel_tol, int(spec.max_subdivisions))
    if not ok:
        raise QuadratureError(
            f"quadrature did not converge (estimate {value:.6g}, error {err:.3g})", value, err)
    return value, err
