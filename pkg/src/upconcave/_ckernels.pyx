# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: capped-simplex projection and ray-profile quadrature.

Same algorithms and signatures as ``_kernels_py``; scalar loops instead of
numpy vectorization.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, fabs

cnp.import_array()

cdef double[5] GL_NODES = [-0.9061798459386640, -0.5384693101056831, 0.0,
                           0.5384693101056831, 0.9061798459386640]
cdef double[5] GL_WEIGHTS = [0.2369268850561891, 0.4786286704993665,
                             0.5688888888888889, 0.4786286704993665,
                             0.2369268850561891]

cdef enum:
    MAX_PANELS = 1024


cdef inline double _clip01(double a) nogil:
    if a < 0.0:
        return 0.0
    if a > 1.0:
        return 1.0
    return a


def project_capped_simplex(v, double k, bint equality):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t d = vv.shape[0]
    cdef Py_ssize_t i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(d, dtype=np.float64)
    cdef double acc = 0.0
    for i in range(d):
        out[i] = _clip01(vv[i])
        acc += out[i]
    if not equality and acc <= k:
        return out
    if k <= 0.0:
        out[:] = 0.0
        return out
    if k >= d:
        out[:] = 1.0
        return out

    cdef cnp.ndarray[cnp.float64_t, ndim=1] bps = np.empty(2 * d, dtype=np.float64)
    for i in range(d):
        bps[i] = vv[i] - 1.0
        bps[d + i] = vv[i]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(bps, kind="stable")

    cdef double total = <double>d
    cdef double slope = 0.0
    cdef double prev = bps[order[0]]
    cdef double tau = bps[order[2 * d - 1]]
    cdef double b, nxt
    for j in range(2 * d):
        b = bps[order[j]]
        nxt = total + slope * (b - prev)
        if nxt <= k:
            if slope != 0.0:
                tau = prev + (k - total) / slope
            else:
                tau = prev
            break
        total = nxt
        prev = b
        if order[j] < d:
            slope -= 1.0
        else:
            slope += 1.0
    for i in range(d):
        out[i] = _clip01(vv[i] - tau)
    return out


cdef inline double _integrand(double c, double s, double r) nogil:
    return exp(-c * (1.0 - pow(r, s)))


cdef double _simpson(double c, double s, Py_ssize_t n) nogil:
    cdef double h = 1.0 / (n - 1)
    cdef double acc = _integrand(c, s, 0.0) + _integrand(c, s, 1.0)
    cdef Py_ssize_t i
    for i in range(1, n - 1):
        if i % 2 == 1:
            acc += 4.0 * _integrand(c, s, i * h)
        else:
            acc += 2.0 * _integrand(c, s, i * h)
    return acc * h / 3.0


def ray_weight(double c, double s, double tol=1e-12, Py_ssize_t n0=65,
               Py_ssize_t nmax=4097):
    cdef Py_ssize_t n = n0
    cdef double prev = _simpson(c, s, n)
    cdef double cur
    while n < nmax:
        n = 2 * n - 1
        cur = _simpson(c, s, n)
        if fabs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


cdef inline double _gl(double c, double s, double a, double b) nogil:
    cdef double half = 0.5 * (b - a)
    cdef double mid = 0.5 * (a + b)
    cdef double acc = 0.0
    cdef int q
    for q in range(5):
        acc += GL_WEIGHTS[q] * _integrand(c, s, mid + half * GL_NODES[q])
    return half * acc


def sample_ray(double c, double s, u, double tol=1e-10, int max_iter=60,
               int n_panels=64):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(
        np.atleast_1d(u), dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.empty(n, dtype=np.float64)
    cdef double cum[MAX_PANELS + 1]
    cdef double width
    cdef Py_ssize_t i, lo_j, hi_j, mid_j, it
    cdef double target, lo, hi, mid, base, edge
    if n_panels > MAX_PANELS:
        raise ValueError("n_panels exceeds %d" % MAX_PANELS)
    width = 1.0 / n_panels
    cum[0] = 0.0
    for i in range(n_panels):
        cum[i + 1] = cum[i] + _gl(c, s, i * width, (i + 1) * width)

    for i in range(n):
        if uu[i] <= 0.0:
            z[i] = 0.0
            continue
        if uu[i] >= 1.0:
            z[i] = 1.0
            continue
        target = uu[i] * cum[n_panels]
        # last panel j with cum[j] <= target
        lo_j = 0
        hi_j = n_panels
        while hi_j - lo_j > 1:
            mid_j = (lo_j + hi_j) // 2
            if cum[mid_j] <= target:
                lo_j = mid_j
            else:
                hi_j = mid_j
        edge = lo_j * width
        lo = edge
        hi = (lo_j + 1) * width
        base = cum[lo_j] - target
        for it in range(max_iter):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if base + _gl(c, s, edge, mid) < 0.0:
                lo = mid
            else:
                hi = mid
        z[i] = 0.5 * (lo + hi)
    return z
