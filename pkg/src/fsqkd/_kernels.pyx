# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementation of the numerical hot kernels.

Mirrors ``fsqkd._kernels_py`` (see that module for the math notes); the
adaptive control flow is kept structurally identical so both backends make
the same refinement decisions, while the per-point special-function work
runs in tight C loops.
"""

import math

import numpy as np

from libc.math cimport exp, fabs, cos, sin, sqrt

from scipy.special.cython_special cimport wofz, jv, eval_genlaguerre, gammaln

from .mathkern import QuadratureConvergenceError, _XGK, _WGK, _WG


# Gauss-Kronrod 15 constants shared with the NumPy backend.
cdef double[15] XGK
cdef double[15] WGK
cdef double[7] WG

def _init_gk():
    cdef Py_ssize_t i
    for i in range(15):
        XGK[i] = _XGK[i]
        WGK[i] = _WGK[i]
    for i in range(7):
        WG[i] = _WG[i]

_init_gk()


cdef inline double _s_value(double b, double v) nogil:
    """exp(-v^2) Re[erf(b + iv)] via the Faddeeva function, overflow-free."""
    cdef double complex wz = wofz(-v + 1j * b)
    cdef double c = cos(2.0 * b * v)
    cdef double s = sin(2.0 * b * v)
    return exp(-v * v) - exp(-b * b) * (c * wz.real + s * wz.imag)


def scaled_re_erf(double b, v):
    """exp(-v^2) * Re[erf(b + i v)] for b >= 0, computed without overflow."""
    if b < 0.0:
        raise ValueError(f"b must be >= 0, got {b}")
    arr = np.asarray(v, dtype=float)
    flat = np.ascontiguousarray(arr.ravel())
    out = np.empty_like(flat)
    cdef double[::1] x = flat
    cdef double[::1] y = out
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            y[i] = _s_value(b, x[i])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


cdef void _gk15_profile(double b, double beta, double lo, double hi,
                        double* val, double* err) nogil:
    """GK15 of S(b, beta*t)^2 on [lo, hi]; err = |K15 - G7|."""
    cdef double mid = 0.5 * (hi + lo)
    cdef double half = 0.5 * (hi - lo)
    cdef double k15 = 0.0, g7 = 0.0, t, s, f
    cdef Py_ssize_t j
    for j in range(15):
        t = mid + half * XGK[j]
        s = _s_value(b, beta * t)
        f = s * s
        k15 += WGK[j] * f
        if j % 2 == 1:
            g7 += WG[(j - 1) // 2] * f
    val[0] = k15 * half
    err[0] = fabs((k15 - g7) * half)


def _gk15_many(double b, double beta, double[::1] los, double[::1] his):
    cdef Py_ssize_t i, n = los.shape[0]
    vals = np.empty(n)
    errs = np.empty(n)
    cdef double[::1] v = vals
    cdef double[::1] e = errs
    with nogil:
        for i in range(n):
            _gk15_profile(b, beta, los[i], his[i], &v[i], &e[i])
    return vals, errs


def capture_segments(double b, double beta, points, double abs_tol=1e-12,
                     double rel_tol=1e-10, int max_subdivisions=2000):
    """Integrals of S(b, beta*t)^2 over consecutive segments of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size < 2:
        raise ValueError("points must be a 1-D array with at least two entries")
    if np.any(np.diff(points) < 0.0):
        raise ValueError("points must be non-decreasing")
    los = np.ascontiguousarray(points[:-1])
    his = np.ascontiguousarray(points[1:])
    owner = np.arange(los.size)
    nonempty = his > los
    los, his, owner = los[nonempty], his[nonempty], owner[nonempty]
    out = np.zeros(points.size - 1, dtype=float)
    if los.size == 0:
        return out
    vals, errs = _gk15_many(b, beta, np.ascontiguousarray(los), np.ascontiguousarray(his))
    n_splits = 0
    while True:
        total = vals.sum()
        tol = max(abs_tol, rel_tol * abs(total))
        if errs.sum() <= tol:
            np.add.at(out, owner, vals)
            return out
        split = errs > tol / (2.0 * len(errs))
        if not split.any():
            split[np.argmax(errs)] = True
        floors = np.maximum(np.abs(los), np.abs(his)) * 1e-15 + 1e-300
        split &= (his - los) > floors
        if not split.any():
            raise QuadratureConvergenceError(
                f"capture segment too narrow to subdivide (error {errs.sum():.3e}, "
                f"tolerance {tol:.3e})",
                estimate=total,
                achieved_error=float(errs.sum()),
            )
        n_splits += int(split.sum())
        if n_splits > max_subdivisions:
            raise QuadratureConvergenceError(
                f"max_subdivisions={max_subdivisions} exceeded in capture integral "
                f"(error {errs.sum():.3e}, tolerance {tol:.3e})",
                estimate=total,
                achieved_error=float(errs.sum()),
            )
        mids = 0.5 * (los[split] + his[split])
        new_los = np.concatenate([los[split], mids])
        new_his = np.concatenate([mids, his[split]])
        new_owner = np.concatenate([owner[split], owner[split]])
        new_vals, new_errs = _gk15_many(
            b, beta, np.ascontiguousarray(new_los), np.ascontiguousarray(new_his)
        )
        los = np.concatenate([los[~split], new_los])
        his = np.concatenate([his[~split], new_his])
        owner = np.concatenate([owner[~split], new_owner])
        vals = np.concatenate([vals[~split], new_vals])
        errs = np.concatenate([errs[~split], new_errs])


def capture_interval(double b, double beta, double lo, double hi,
                     double abs_tol=1e-12, double rel_tol=1e-10,
                     int max_subdivisions=2000):
    """Integral of S(b, beta*t)^2 over [lo, hi] (sign-aware)."""
    if hi < lo:
        return -capture_interval(b, beta, hi, lo, abs_tol, rel_tol, max_subdivisions)
    if hi == lo:
        return 0.0
    seg = capture_segments(b, beta, np.array([lo, hi]), abs_tol, rel_tol, max_subdivisions)
    return float(seg[0])


_leggauss_cache = {}


def _leggauss(int n):
    got = _leggauss_cache.get(n)
    if got is None:
        got = np.polynomial.legendre.leggauss(n)
        got = (np.ascontiguousarray(got[0]), np.ascontiguousarray(got[1]))
        _leggauss_cache[n] = got
    return got


def _lommel_quad(Py_ssize_t n, long p1, long p2, long l, double a,
                 double k, double L, double r_t, double r_r):
    x_np, w_np = _leggauss(n)
    r = 0.5 * r_t * (x_np + 1.0)
    wr = 0.5 * r_t * w_np

    f1 = np.empty(n)
    f2 = np.empty(n)
    alphas = np.empty(n)
    jl = np.empty(n)
    jp = np.empty(n)

    cdef double[::1] rv = np.ascontiguousarray(r)
    cdef double[::1] wv = np.ascontiguousarray(wr)
    cdef double[::1] f1v = f1
    cdef double[::1] f2v = f2
    cdef double[::1] av = alphas
    cdef double[::1] jlv = jl
    cdef double[::1] jpv = jp

    cdef Py_ssize_t i, j, nn = n
    cdef long pp1 = p1, pp2 = p2, ll = l
    cdef double aa = a, kk = k, LL = L, rt = r_t, rr = r_r
    cdef double norm1 = exp(0.5 * (gammaln(pp1 + 1.0) - gammaln(pp1 + ll + 1.0)))
    cdef double norm2 = exp(0.5 * (gammaln(pp2 + 1.0) - gammaln(pp2 + ll + 1.0)))
    cdef double u, uu, base, prof, ai, aj, den, scale, mid, jm, jpm, ratm
    cdef double kern, acc, diagv, li, lj
    cdef bint same_p = pp1 == pp2

    with nogil:
        for i in range(nn):
            u = rv[i] / aa
            uu = u * u
            base = u**ll * exp(-0.5 * uu) * rv[i] * wv[i]
            f1v[i] = norm1 * base * eval_genlaguerre(pp1, <double>ll, uu)
            if same_p:
                f2v[i] = f1v[i] * (norm2 / norm1)
            else:
                f2v[i] = norm2 * base * eval_genlaguerre(pp2, <double>ll, uu)
            ai = kk * rv[i] / LL
            av[i] = ai
            u = ai * rr
            jlv[i] = jv(<double>ll, u)
            jpv[i] = 0.5 * (jv(<double>ll - 1.0, u) - jv(<double>ll + 1.0, u))

        acc = 0.0
        for i in range(nn):
            ai = av[i]
            li = f1v[i]
            for j in range(nn):
                aj = av[j]
                den = ai * ai - aj * aj
                scale = ai * ai + aj * aj
                if fabs(den) < 1e-12 * scale or i == j:
                    mid = 0.5 * (ai + aj) * rr
                    jm = jv(<double>ll, mid)
                    jpm = 0.5 * (jv(<double>ll - 1.0, mid) - jv(<double>ll + 1.0, mid))
                    if ll == 0:
                        ratm = 0.0
                    else:
                        ratm = (ll / mid) * (ll / mid)
                    kern = 0.5 * rr * rr * (jpm * jpm + (1.0 - ratm) * jm * jm)
                else:
                    kern = rr * (aj * jlv[i] * jpv[j] - ai * jpv[i] * jlv[j]) / den
                acc += li * kern * f2v[j]
    return float(acc)


def lg_radial_overlap(long p1, long p2, long l, double a, double k, double L,
                      double r_t, double r_r, double abs_tol=1e-15,
                      double rel_tol=1e-10):
    """Receiver-plane radial overlap of two diffracted LG fields (same |l|).

    Node count escalates until two successive Gauss-Legendre levels agree
    within tolerance, exactly as in the NumPy backend.
    """
    if l < 0:
        raise ValueError(f"l must be >= 0 here (sign handled by callers), got {l}")
    oscillations = k * r_t * r_r / (2.0 * math.pi * L)
    n = max(48, int(24 + 9.0 * oscillations))
    prev = None
    delta = math.inf
    while n <= 6000:
        val = _lommel_quad(n, p1, p2, l, a, k, L, r_t, r_r)
        if prev is not None:
            delta = abs(val - prev)
            if delta <= max(abs_tol, rel_tol * abs(val)):
                return val
        prev = val
        n = int(n * 1.6) + 1
    raise QuadratureConvergenceError(
        f"radial overlap did not converge for p=({p1},{p2}), l={l}",
        estimate=math.nan if prev is None else prev,
        achieved_error=delta,
    )
