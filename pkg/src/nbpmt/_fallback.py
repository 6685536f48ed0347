"""Pure Python/numpy implementation of the hot kernels.

Mirrors ``_core.pyx`` operation for operation: both backends draw from the
same bit generators in the same order, so a given seed yields the same
chain whichever backend is active.
"""

import math

import numpy as np

from . import _quad

NAME = "python"

C_FLOOR = 1e-300
MAX_TRIES = 100000


# --------------------------------------------------------------------------
# generalized inverse Gaussian variates (Hoermann & Leydold, 2014)

def _lq(x, lam, om):
    return (lam - 1.0) * math.log(x) - 0.5 * om * (x + 1.0 / x)


def _gig_mode(lam, om):
    if lam < 1.0:
        return om / (math.sqrt((lam - 1.0) * (lam - 1.0) + om * om) + 1.0 - lam)
    return (math.sqrt((1.0 - lam) * (1.0 - lam) + om * om) - (1.0 - lam)) / om


def _gig_rou_shift(gen, lam, om):
    m = _gig_mode(lam, om)
    a2 = -2.0 * (lam + 1.0) / om - m
    a1 = 2.0 * m * (lam - 1.0) / om - 1.0
    p1 = a1 - a2 * a2 / 3.0
    q1 = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + m
    arg = -q1 * math.sqrt(-27.0 / (p1 * p1 * p1)) / 2.0
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg)
    s1 = -math.sqrt(-4.0 * p1 / 3.0)
    root1 = s1 * math.cos(phi / 3.0 + math.pi / 3.0) - a2 / 3.0
    root2 = -s1 * math.cos(phi / 3.0) - a2 / 3.0
    lm = _lq(m, lam, om)
    if root1 > 0.0:
        vmin = (root1 - m) * math.exp(0.5 * (_lq(root1, lam, om) - lm))
    else:
        vmin = -m
    vmax = (root2 - m) * math.exp(0.5 * (_lq(root2, lam, om) - lm))
    for _ in range(MAX_TRIES):
        u = gen.random()
        v = vmin + (vmax - vmin) * gen.random()
        if u <= 0.0:
            continue
        x = v / u + m
        if x > 0.0 and 2.0 * math.log(u) <= _lq(x, lam, om) - lm:
            return x
    return math.nan


def _gig_rou_noshift(gen, lam, om):
    m = _gig_mode(lam, om)
    umax = math.exp(0.5 * _lq(m, lam, om))
    xplus = ((1.0 + lam) + math.sqrt((1.0 + lam) * (1.0 + lam) + om * om)) / om
    vmax = xplus * math.exp(0.5 * _lq(xplus, lam, om))
    for _ in range(MAX_TRIES):
        u = umax * gen.random()
        v = vmax * gen.random()
        if u <= 0.0 or v <= 0.0:
            continue
        x = v / u
        if 2.0 * math.log(u) <= _lq(x, lam, om):
            return x
    return math.nan


def _gig_hl(gen, lam, om):
    m = _gig_mode(lam, om)
    x0 = om / (1.0 - lam)
    xs = max(x0, 2.0 / om)
    k1 = math.exp(_lq(m, lam, om))
    a1 = k1 * x0
    if x0 < 2.0 / om:
        k2 = math.exp(-om)
        if lam > 0.0:
            a2 = k2 * ((2.0 / om) ** lam - x0 ** lam) / lam
        else:
            a2 = k2 * (math.log(2.0) - 2.0 * math.log(om))
    else:
        k2 = 0.0
        a2 = 0.0
    k3 = xs ** (lam - 1.0)
    a3 = 2.0 * k3 * math.exp(-xs * om / 2.0) / om
    atot = a1 + a2 + a3
    for _ in range(MAX_TRIES):
        u = gen.random()
        v = atot * gen.random()
        if v <= a1:
            x = x0 * v / a1
            h = k1
        elif v <= a1 + a2:
            v = v - a1
            if lam > 0.0:
                x = (x0 ** lam + v * lam / k2) ** (1.0 / lam)
            else:
                x = om * math.exp(v * math.exp(om))
            h = k2 * x ** (lam - 1.0)
        else:
            v = v - (a1 + a2)
            z = math.exp(-xs * om / 2.0) - om * v / (2.0 * k3)
            if z <= 0.0:
                continue
            x = -2.0 / om * math.log(z)
            h = k3 * math.exp(-x * om / 2.0)
        if x <= 0.0:
            continue
        uh = u * h
        if uh <= 0.0 or math.log(uh) <= _lq(x, lam, om):
            return x
    return math.nan


def _gig_standard(gen, lam, om):
    """Variate with density proportional to y^(lam-1) exp(-om (y + 1/y) / 2), lam >= 0."""
    if lam >= 1.0 or om > 1.0:
        return _gig_rou_shift(gen, lam, om)
    if om >= min(0.5, 2.0 / 3.0 * math.sqrt(1.0 - lam)):
        return _gig_rou_noshift(gen, lam, om)
    return _gig_hl(gen, lam, om)


def sample_gig_core(gen, c, d, p):
    # parameters are assumed valid here; see stats_kernel.sample_gig
    if c == 0.0:
        return gen.standard_gamma(p) * 2.0 / d
    if d == 0.0:
        return 0.5 * c / gen.standard_gamma(-p)
    om = math.sqrt(c * d)
    sc = math.sqrt(c / d)
    if p >= 0.0:
        return sc * _gig_standard(gen, p, om)
    return sc / _gig_standard(gen, -p, om)


def gig_draws(gen, c, d, p, size):
    return np.array([sample_gig_core(gen, c, d, p) for _ in range(size)], dtype=float)


# --------------------------------------------------------------------------
# Gibbs block sweep

def make_bank(generators):
    return list(generators)


def gibbs_sweep(bank, x, theta, lam, xi, w, a, b):
    """One sweep of the (lambda, xi, theta) conditionals, updating arrays in place.

    Returns ``(sum_i log(1 - kappa_i), bad_index)``; ``bad_index`` is -1 unless
    a coordinate produced a non-finite or non-positive component.
    """
    p = a - 0.5
    shape = b + 0.5
    total = 0.0
    for i in range(x.shape[0]):
        gen = bank[i]
        th = float(theta[i])
        c = th * th / float(xi[i])
        if c < C_FLOOR:
            # theta exactly 0 (only possible at the start): the lambda conditional
            # degenerates, so keep lambda for this sweep
            lv = float(lam[i])
        else:
            lv = sample_gig_core(gen, c, 2.0, p)
        if not (lv > 0.0 and lv < math.inf):
            return total, i
        xv = (th * th / (2.0 * lv) + 1.0) / gen.standard_gamma(shape)
        s2 = lv * xv
        if not (xv > 0.0 and s2 > 0.0 and s2 < math.inf):
            return total, i
        wi = s2 / (1.0 + s2)
        th = wi * float(x[i]) + math.sqrt(wi) * gen.standard_normal()
        lw = -math.log1p(1.0 / s2)
        if not (math.isfinite(th) and math.isfinite(lw)):
            return total, i
        lam[i] = lv
        xi[i] = xv
        w[i] = wi
        theta[i] = th
        total += lw
    return total, -1


# --------------------------------------------------------------------------
# kappa integrals  I(t) = int_0^1 exp(-k t) k^(alpha-1) (1-k)^(beta-1) dk
#
# Split at k = 1/2.  Left half: k = s^(1/alpha); right half: 1 - k = u^(1/beta).
# Both substitutions absorb the endpoint power exactly, leaving bounded
# integrands; geometric breakpoints 2^-j resolve the exp(-k t) scale.

def n_levels(tmax):
    return int(min(64, max(4, math.ceil(math.log2(tmax + 1.0)) + 5)))


def initial_panels(alpha, beta, levels):
    lo, hi, piece = [], [], []
    for which, power in ((0, alpha), (1, beta)):
        bps = [0.0] + [math.pow(2.0, -(levels + 1 - j) * power) for j in range(levels + 1)]
        for j in range(levels + 1):
            lo.append(bps[j])
            hi.append(bps[j + 1])
            piece.append(which)
    return np.array(lo), np.array(hi), np.array(piece)


def node_terms(z, piece, alpha, beta):
    """Exponent coefficient ``e`` and prefactor ``q`` with integrand exp(-e t) q."""
    z = np.asarray(z, dtype=float)
    left = np.broadcast_to(np.asarray(piece) == 0, z.shape) if np.ndim(piece) else (
        np.full(z.shape, piece == 0))
    e = np.empty_like(z)
    q = np.empty_like(z)
    kap = z[left] ** (1.0 / alpha)
    e[left] = kap
    q[left] = (1.0 - kap) ** (beta - 1.0) / alpha
    right = ~left
    kap = 1.0 - z[right] ** (1.0 / beta)
    e[right] = kap
    q[right] = kap ** (alpha - 1.0) / beta
    return e, q


def _refine_one(t, alpha, beta, levels, rel_tol, max_panels, guess):
    total = 0.0
    err = 0.0
    ok = True
    lo, hi, piece = initial_panels(alpha, beta, levels)
    for which in (0, 1):
        sel = piece == which
        bps = np.concatenate([lo[sel], hi[sel][-1:]])

        def f(z, which=which):
            e, q = node_terms(z, which, alpha, beta)
            return np.exp(-e * t) * q

        val, e_est, conv = _quad.adaptive(
            f, bps, 0.5 * rel_tol * guess, 0.0, max_panels // 2)
        total += val
        err += e_est
        ok = ok and conv
    return total, err, ok


def log_kappa_integrals(t, alpha, beta, rel_tol, max_panels):
    """Return ``(log I, relative error estimate, converged flags)`` for each t."""
    t = np.ascontiguousarray(t, dtype=float)
    out = np.empty(t.size)
    relerr = np.empty(t.size)
    ok = np.ones(t.size, dtype=bool)
    if t.size == 0:
        return out, relerr, ok
    levels = n_levels(float(t.max()))
    lo, hi, piece = initial_panels(alpha, beta, levels)
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    z = centre[:, None] + half[:, None] * _quad.NODES[None, :]
    e, q = node_terms(z, piece[:, None], alpha, beta)
    wk = half[:, None] * _quad.WEIGHTS_K[None, :] * q
    wg = half[:, None] * _quad.WEIGHTS_G[None, :] * q
    chunk = max(1, 400000 // e.size)
    for start in range(0, t.size, chunk):
        tt = t[start:start + chunk]
        ex = np.exp(-tt[:, None, None] * e[None, :, :])
        k = (ex * wk[None]).sum(axis=2)
        g = (ex * wg[None]).sum(axis=2)
        tot = k.sum(axis=1)
        err = np.abs(k - g).sum(axis=1)
        out[start:start + tt.size] = tot
        relerr[start:start + tt.size] = err / tot
    for i in np.flatnonzero(~(relerr <= rel_tol)):
        tot, err, conv = _refine_one(t[i], alpha, beta, levels, rel_tol, max_panels, out[i])
        out[i] = tot
        relerr[i] = err / tot
        ok[i] = conv and relerr[i] <= rel_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(out), relerr, ok
