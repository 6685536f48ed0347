"""Data-adaptive estimates of the sparsity shape a."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError, QuadratureError
from .nbp_model import Hyperparams, log_kappa_integral
from .stats_kernel import QuadratureSpec, log_gamma

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EsConfig:
    c1: float = 2.0
    c2: float = 1.0

    def __post_init__(self):
        if not (self.c1 >= 2 and self.c2 >= 1):
            raise DomainError("ES constants need c1 >= 2 and c2 >= 1")


@dataclass(frozen=True)
class RemlConfig:
    coarse_grid_size: int = 50
    refine_tol: float = 1e-6
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.coarse_grid_size < 2:
            raise DomainError("coarse grid needs at least two points")
        if not self.refine_tol > 0:
            raise DomainError("refine_tol must be positive")


def _data(x, min_n=2):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < min_n:
        raise DomainError(f"need at least {min_n} observations")
    if not np.all(np.isfinite(x)):
        raise InputError("data must be finite")
    return x


def es_threshold(n: int, cfg: EsConfig = EsConfig()) -> float:
    return math.sqrt(cfg.c1 * math.log(n))


def es_estimate(x, cfg: EsConfig = EsConfig()) -> float:
    """max(1/n, #{|x_j| > sqrt(c1 log n)} / (c2 n)), capped at 1."""
    x = _data(x)
    n = x.size
    count = int(np.count_nonzero(np.abs(x) > es_threshold(n, cfg)))
    return min(1.0, max(1.0 / n, count / (cfg.c2 * n)))


class RemlObjective:
    """sum_i log m(x_i; a, b) as a function of a, with the data-only work cached."""

    def __init__(self, x, b: float, quadrature: QuadratureSpec = QuadratureSpec()):
        self.x = _data(x)
        if not (b > 0 and math.isfinite(b)):
            raise DomainError("b must be positive")
        self.b = float(b)
        self.quad = quadrature
        self.t = 0.5 * self.x * self.x
        self.n = self.x.size

    def __call__(self, a: float) -> float:
        a = float(a)
        try:
            logi = log_kappa_integral(self.t, self.b + 0.5, a, self.quad)
        except QuadratureError as exc:
            raise QuadratureError(f"REML objective failed at a={a:.6g}: {exc}",
                                  exc.value, exc.err_est) from exc
        norm = log_gamma(a + self.b) - log_gamma(a) - log_gamma(self.b)
        return float(self.n * (norm - 0.5 * math.log(2.0 * math.pi)) + logi.sum())


def reml_objective(a: float, x, b: float, quadrature: QuadratureSpec = QuadratureSpec()) -> float:
    Hyperparams(a, b)
    return RemlObjective(x, b, quadrature)(a)


def reml_estimate(x, b: float, cfg: RemlConfig = RemlConfig()) -> float:
    """Maximise the marginal likelihood over a in [1/n, 1].

    Log-spaced coarse grid, then golden-section search on the bracket
    around the best grid point.  Ties go to the smaller a.
    """
    obj = RemlObjective(x, b, cfg.quadrature)
    n = obj.n
    lo, hi = 1.0 / n, 1.0
    grid = np.geomspace(lo, hi, cfg.coarse_grid_size)
    grid[0], grid[-1] = lo, hi
    vals = np.array([obj(a) for a in grid])
    j = int(np.argmax(vals))  # first maximiser, i.e. the smallest a on ties
    left = grid[max(j - 1, 0)]
    right = grid[min(j + 1, grid.size - 1)]
    best_a, best_v = float(grid[j]), float(vals[j])
    if right > left:
        a_ref, v_ref = _golden_max(obj, float(left), float(right), cfg.refine_tol)
        if v_ref > best_v:
            best_a, best_v = a_ref, v_ref
    return best_a


def _golden_max(f, lo, hi, tol):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd
