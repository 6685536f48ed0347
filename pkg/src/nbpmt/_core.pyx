# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: GIG variates, the Gibbs block sweep and kappa integrals.

Each routine is a line-by-line twin of the one in ``_fallback.py`` and pulls
uniforms, normals and gammas from the same numpy bit generators in the same
order.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport (acos, cos, exp, log, log1p, pow, sqrt, fabs, ceil,
                        log2, isfinite, INFINITY, NAN, M_PI)
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_uniform,
                                           random_standard_normal,
                                           random_standard_gamma)

cnp.import_array()

NAME = "cython"

cdef double C_FLOOR = 1e-300
cdef int MAX_TRIES = 100000

cdef double[15] NODES
cdef double[15] WK
cdef double[15] WG

from . import _quad as _q
for _i in range(15):
    NODES[_i] = _q.NODES[_i]
    WK[_i] = _q.WEIGHTS_K[_i]
    WG[_i] = _q.WEIGHTS_G[_i]


cdef bitgen_t* _bitgen_of(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator")
    return <bitgen_t*>PyCapsule_GetPointer(capsule, "BitGenerator")


# --------------------------------------------------------------------------
# generalized inverse Gaussian variates (Hoermann & Leydold, 2014)

cdef inline double _lq(double x, double lam, double om) nogil:
    return (lam - 1.0) * log(x) - 0.5 * om * (x + 1.0 / x)


cdef inline double _gig_mode(double lam, double om) nogil:
    if lam < 1.0:
        return om / (sqrt((lam - 1.0) * (lam - 1.0) + om * om) + 1.0 - lam)
    return (sqrt((1.0 - lam) * (1.0 - lam) + om * om) - (1.0 - lam)) / om


cdef double _gig_rou_shift(bitgen_t* bg, double lam, double om) nogil:
    cdef double m = _gig_mode(lam, om)
    cdef double a2 = -2.0 * (lam + 1.0) / om - m
    cdef double a1 = 2.0 * m * (lam - 1.0) / om - 1.0
    cdef double p1 = a1 - a2 * a2 / 3.0
    cdef double q1 = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + m
    cdef double arg = -q1 * sqrt(-27.0 / (p1 * p1 * p1)) / 2.0
    cdef double phi, s1, root1, root2, lm, vmin, vmax, u, v, x
    cdef int k
    if arg > 1.0:
        arg = 1.0
    if arg < -1.0:
        arg = -1.0
    phi = acos(arg)
    s1 = -sqrt(-4.0 * p1 / 3.0)
    root1 = s1 * cos(phi / 3.0 + M_PI / 3.0) - a2 / 3.0
    root2 = -s1 * cos(phi / 3.0) - a2 / 3.0
    lm = _lq(m, lam, om)
    if root1 > 0.0:
        vmin = (root1 - m) * exp(0.5 * (_lq(root1, lam, om) - lm))
    else:
        vmin = -m
    vmax = (root2 - m) * exp(0.5 * (_lq(root2, lam, om) - lm))
    for k in range(MAX_TRIES):
        u = random_standard_uniform(bg)
        v = vmin + (vmax - vmin) * random_standard_uniform(bg)
        if u <= 0.0:
            continue
        x = v / u + m
        if x > 0.0 and 2.0 * log(u) <= _lq(x, lam, om) - lm:
            return x
    return NAN


cdef double _gig_rou_noshift(bitgen_t* bg, double lam, double om) nogil:
    cdef double m = _gig_mode(lam, om)
    cdef double umax = exp(0.5 * _lq(m, lam, om))
    cdef double xplus = ((1.0 + lam) + sqrt((1.0 + lam) * (1.0 + lam) + om * om)) / om
    cdef double vmax = xplus * exp(0.5 * _lq(xplus, lam, om))
    cdef double u, v, x
    cdef int k
    for k in range(MAX_TRIES):
        u = umax * random_standard_uniform(bg)
        v = vmax * random_standard_uniform(bg)
        if u <= 0.0 or v <= 0.0:
            continue
        x = v / u
        if 2.0 * log(u) <= _lq(x, lam, om):
            return x
    return NAN


cdef double _gig_hl(bitgen_t* bg, double lam, double om) nogil:
    cdef double m = _gig_mode(lam, om)
    cdef double x0 = om / (1.0 - lam)
    cdef double xs = x0 if x0 > 2.0 / om else 2.0 / om
    cdef double k1 = exp(_lq(m, lam, om))
    cdef double a1 = k1 * x0
    cdef double k2, a2, k3, a3, atot, u, v, x, h, z, uh
    cdef int k
    if x0 < 2.0 / om:
        k2 = exp(-om)
        if lam > 0.0:
            a2 = k2 * (pow(2.0 / om, lam) - pow(x0, lam)) / lam
        else:
            a2 = k2 * (log(2.0) - 2.0 * log(om))
    else:
        k2 = 0.0
        a2 = 0.0
    k3 = pow(xs, lam - 1.0)
    a3 = 2.0 * k3 * exp(-xs * om / 2.0) / om
    atot = a1 + a2 + a3
    for k in range(MAX_TRIES):
        u = random_standard_uniform(bg)
        v = atot * random_standard_uniform(bg)
        if v <= a1:
            x = x0 * v / a1
            h = k1
        elif v <= a1 + a2:
            v = v - a1
            if lam > 0.0:
                x = pow(pow(x0, lam) + v * lam / k2, 1.0 / lam)
            else:
                x = om * exp(v * exp(om))
            h = k2 * pow(x, lam - 1.0)
        else:
            v = v - (a1 + a2)
            z = exp(-xs * om / 2.0) - om * v / (2.0 * k3)
            if z <= 0.0:
                continue
            x = -2.0 / om * log(z)
            h = k3 * exp(-x * om / 2.0)
        if x <= 0.0:
            continue
        uh = u * h
        if uh <= 0.0 or log(uh) <= _lq(x, lam, om):
            return x
    return NAN


cdef inline double _gig_standard(bitgen_t* bg, double lam, double om) nogil:
    cdef double lim
    if lam >= 1.0 or om > 1.0:
        return _gig_rou_shift(bg, lam, om)
    lim = 2.0 / 3.0 * sqrt(1.0 - lam)
    if lim > 0.5:
        lim = 0.5
    if om >= lim:
        return _gig_rou_noshift(bg, lam, om)
    return _gig_hl(bg, lam, om)


cdef double _sample_gig(bitgen_t* bg, double c, double d, double p) nogil:
    cdef double om, sc
    if c == 0.0:
        return random_standard_gamma(bg, p) * 2.0 / d
    if d == 0.0:
        return 0.5 * c / random_standard_gamma(bg, -p)
    om = sqrt(c * d)
    sc = sqrt(c / d)
    if p >= 0.0:
        return sc * _gig_standard(bg, p, om)
    return sc / _gig_standard(bg, -p, om)


def sample_gig_core(gen, double c, double d, double p):
    return _sample_gig(_bitgen_of(gen), c, d, p)


def gig_draws(gen, double c, double d, double p, Py_ssize_t size):
    cdef bitgen_t* bg = _bitgen_of(gen)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(size)
    cdef double* o = <double*>cnp.PyArray_DATA(out)
    cdef Py_ssize_t i
    for i in range(size):
        o[i] = _sample_gig(bg, c, d, p)
    return out


# --------------------------------------------------------------------------
# Gibbs block sweep

cdef class StreamBank:
    """Holds raw bit-generator pointers for a list of numpy Generators."""
    cdef bitgen_t** ptrs
    cdef Py_ssize_t n
    cdef list keep

    def __cinit__(self, generators):
        self.keep = list(generators)
        self.n = len(self.keep)
        self.ptrs = <bitgen_t**>malloc(max(self.n, 1) * sizeof(bitgen_t*))
        if self.ptrs == NULL:
            raise MemoryError()
        for i, g in enumerate(self.keep):
            self.ptrs[i] = _bitgen_of(g)

    def __dealloc__(self):
        if self.ptrs != NULL:
            free(self.ptrs)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.keep[i]


def make_bank(generators):
    return StreamBank(generators)


def gibbs_sweep(StreamBank bank, double[::1] x, double[::1] theta, double[::1] lam,
                double[::1] xi, double[::1] w, double a, double b):
    cdef double p = a - 0.5
    cdef double shape = b + 0.5
    cdef double total = 0.0
    cdef double th, c, lv, xv, s2, wi, lw
    cdef Py_ssize_t i, n = x.shape[0]
    cdef bitgen_t* bg
    if bank.n < n:
        raise ValueError("stream bank is shorter than the data")
    with nogil:
        for i in range(n):
            bg = bank.ptrs[i]
            th = theta[i]
            c = th * th / xi[i]
            if c < C_FLOOR:
                # theta exactly 0 (only possible at the start): the lambda conditional
                # degenerates, so keep lambda for this sweep
                lv = lam[i]
            else:
                lv = _sample_gig(bg, c, 2.0, p)
            if not (lv > 0.0 and lv < INFINITY):
                with gil:
                    return total, i
            xv = (th * th / (2.0 * lv) + 1.0) / random_standard_gamma(bg, shape)
            s2 = lv * xv
            if not (xv > 0.0 and s2 > 0.0 and s2 < INFINITY):
                with gil:
                    return total, i
            wi = s2 / (1.0 + s2)
            th = wi * x[i] + sqrt(wi) * random_standard_normal(bg)
            lw = -log1p(1.0 / s2)
            if not (isfinite(th) and isfinite(lw)):
                with gil:
                    return total, i
            lam[i] = lv
            xi[i] = xv
            w[i] = wi
            theta[i] = th
            total += lw
    return total, -1


# --------------------------------------------------------------------------
# kappa integrals  I(t) = int_0^1 exp(-k t) k^(alpha-1) (1-k)^(beta-1) dk

def n_levels(double tmax):
    cdef double k = ceil(log2(tmax + 1.0)) + 5
    if k < 4:
        k = 4
    if k > 64:
        k = 64
    return <int>k


cdef inline void _node(double z, int piece, double alpha, double beta,
                       double* e, double* q) nogil:
    cdef double kap
    if piece == 0:
        kap = pow(z, 1.0 / alpha)
        e[0] = kap
        q[0] = pow(1.0 - kap, beta - 1.0) / alpha
    else:
        kap = 1.0 - pow(z, 1.0 / beta)
        e[0] = kap
        q[0] = pow(kap, alpha - 1.0) / beta


cdef inline void _panel(double t, double lo, double hi, int piece, double alpha,
                        double beta, double* est, double* err) nogil:
    cdef double centre = 0.5 * (lo + hi)
    cdef double half = 0.5 * (hi - lo)
    cdef double k = 0.0, g = 0.0, e, q, f
    cdef int j
    for j in range(15):
        _node(centre + half * NODES[j], piece, alpha, beta, &e, &q)
        f = exp(-e * t)
        k += f * (half * WK[j] * q)
        g += f * (half * WG[j] * q)
    est[0] = k
    err[0] = fabs(k - g)


cdef int _refine(double t, double alpha, double beta, double* plo, double* phi,
                 int* ppc, int np0, double rel_tol, int max_panels,
                 double* est, double* err, double* out, double* rel) nogil:
    # globally adaptive: bisect the worst panel until the error budget is met
    cdef double* pe = <double*>malloc(max_panels * sizeof(double))
    cdef double* pr = <double*>malloc(max_panels * sizeof(double))
    cdef double* lo = <double*>malloc(max_panels * sizeof(double))
    cdef double* hi = <double*>malloc(max_panels * sizeof(double))
    cdef int* pc = <int*>malloc(max_panels * sizeof(int))
    cdef int n = np0, j, worst, ok = 0
    cdef double total, toterr, mid
    if pe == NULL or pr == NULL or lo == NULL or hi == NULL or pc == NULL:
        free(pe); free(pr); free(lo); free(hi); free(pc)
        return -1
    for j in range(n):
        lo[j] = plo[j]
        hi[j] = phi[j]
        pc[j] = ppc[j]
        pe[j] = est[j]
        pr[j] = err[j]
    while True:
        total = 0.0
        toterr = 0.0
        worst = 0
        for j in range(n):
            total += pe[j]
            toterr += pr[j]
            if pr[j] > pr[worst]:
                worst = j
        if not (isfinite(total) and isfinite(toterr)):
            break
        if toterr <= rel_tol * total:
            ok = 1
            break
        if n + 1 > max_panels:
            break
        if hi[worst] - lo[worst] <= 64 * 2.220446049250313e-16 * hi[worst]:
            ok = toterr <= 1e3 * 2.220446049250313e-16 * total
            break
        mid = 0.5 * (lo[worst] + hi[worst])
        lo[n] = mid
        hi[n] = hi[worst]
        pc[n] = pc[worst]
        hi[worst] = mid
        _panel(t, lo[worst], hi[worst], pc[worst], alpha, beta, &pe[worst], &pr[worst])
        _panel(t, lo[n], hi[n], pc[n], alpha, beta, &pe[n], &pr[n])
        n += 1
    out[0] = total
    rel[0] = toterr / total
    free(pe); free(pr); free(lo); free(hi); free(pc)
    return ok


def log_kappa_integrals(t, double alpha, double beta, double rel_tol, int max_panels):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t m = tt.shape[0], i
    out = np.empty(m)
    relerr = np.empty(m)
    okarr = np.ones(m, dtype=bool)
    if m == 0:
        return out, relerr, okarr
    cdef double[::1] o = out
    cdef double[::1] r = relerr
    cdef cnp.uint8_t[::1] okv = okarr.view(np.uint8)
    cdef int levels = n_levels(float(tt.max()))
    cdef int npan = 2 * (levels + 1), j, l, pos
    cdef int cap = max_panels if max_panels > npan + 1 else npan + 1
    cdef double[::1] plo = np.empty(npan)
    cdef double[::1] phi = np.empty(npan)
    cdef int[::1] ppc = np.empty(npan, dtype=np.intc)
    cdef double[:, ::1] e = np.empty((npan, 15))
    cdef double[:, ::1] qk = np.empty((npan, 15))
    cdef double[:, ::1] qg = np.empty((npan, 15))
    cdef double[::1] est = np.empty(npan)
    cdef double[::1] err = np.empty(npan)
    cdef double power, centre, half, ev, qv, f, k, g, tot, errsum, ti
    cdef double prev
    pos = 0
    for j in range(2):
        power = alpha if j == 0 else beta
        prev = 0.0
        for l in range(levels + 1):
            plo[pos] = prev
            phi[pos] = pow(2.0, -(levels + 1 - l) * power)
            ppc[pos] = j
            prev = phi[pos]
            pos += 1
    for j in range(npan):
        centre = 0.5 * (plo[j] + phi[j])
        half = 0.5 * (phi[j] - plo[j])
        for l in range(15):
            _node(centre + half * NODES[l], ppc[j], alpha, beta, &ev, &qv)
            e[j, l] = ev
            qk[j, l] = half * WK[l] * qv
            qg[j, l] = half * WG[l] * qv
    with nogil:
        for i in range(m):
            ti = tt[i]
            tot = 0.0
            errsum = 0.0
            for j in range(npan):
                k = 0.0
                g = 0.0
                for l in range(15):
                    f = exp(-ti * e[j, l])
                    k += f * qk[j, l]
                    g += f * qg[j, l]
                est[j] = k
                err[j] = fabs(k - g)
                tot += k
                errsum += err[j]
            o[i] = tot
            r[i] = errsum / tot
            if not (r[i] <= rel_tol):
                okv[i] = _refine(ti, alpha, beta, &plo[0], &phi[0], &ppc[0], npan,
                                 rel_tol, cap, &est[0], &err[0], &o[i], &r[i]) == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(out), relerr, okarr
