# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Denjoy circle-map kernels (same semantics as _pykernels)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fmod, log, fabs

cnp.import_array()


cdef struct Tables:
    const double* u
    const double* l
    const double* c
    const double* img_u
    const double* img_l
    const double* ximg
    Py_ssize_t n
    double extra_x
    double extra_l
    double mass
    double alpha
    const double* values
    const double* slopes
    double h
    Py_ssize_t panels
    double edge
    double total


cdef inline double _mod1(double x) nogil:
    cdef double r = fmod(x, 1.0)
    if r < 0.0:
        r += 1.0
    if r >= 1.0:
        r -= 1.0
    return r


cdef inline double _edge(double tau, const Tables* T) nogil:
    cdef double x = tau / T.h
    cdef Py_ssize_t j = <Py_ssize_t>x
    if j >= T.panels:
        j = T.panels - 1
    cdef double t = x - j
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * T.values[j] + (t3 - 2 * t2 + t) * T.h * T.slopes[j]
            + (-2 * t3 + 3 * t2) * T.values[j + 1] + (t3 - t2) * T.h * T.slopes[j + 1])


cdef inline double _wint(double tau, const Tables* T) nogil:
    if tau <= 0.25:
        return _edge(tau, T)
    if tau < 0.75:
        return T.edge + (tau - 0.25)
    return T.total - _edge(1.0 - tau, T)


cdef inline double _weight(double tau) nogil:
    cdef double s = fabs(tau - 0.5)
    if s <= 0.25:
        return 1.0
    cdef double u = (s - 0.25) / 0.25
    if u >= 1.0:
        return 0.0
    return exp(1.0 - 1.0 / (1.0 - u * u))


cdef inline Py_ssize_t _bisect_right(const double* a, Py_ssize_t n, double x) nogil:
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = n
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _step(double y, const Tables* T, double* d) nogil:
    cdef Py_ssize_t k
    cdef double uk, lk, s, tau, ck, gy, off, rel
    y = _mod1(y)
    if T.n == 0:
        d[0] = 1.0
        return _mod1(y + T.alpha)
    k = _bisect_right(T.u, T.n, y) - 1
    if k < 0:
        k = T.n - 1
    uk = T.u[k]
    lk = T.l[k]
    if y <= uk + lk:
        s = y - uk
        tau = s / lk if lk > 0.0 else 0.0
        ck = T.c[k]
        gy = T.img_u[k] + s + ck * lk * _wint(tau, T)
        d[0] = 1.0 + ck * _weight(tau)
    else:
        off = y - (uk + lk)
        gy = T.img_u[k] + T.img_l[k] + off
        if T.extra_l > 0.0:
            rel = _mod1(T.extra_x - T.ximg[k])
            if rel > 0.0 and rel < off / (1.0 - T.mass):
                gy += T.extra_l
        d[0] = 1.0
    return _mod1(gy)


cdef class _Prepared:
    cdef Tables T
    cdef object keep

    def __init__(self, raw):
        (u, l, c, img_u, img_l, ximg, extra_x, extra_l, mass, alpha,
         values, slopes, h, panels, edge, total) = raw
        arrs = [np.ascontiguousarray(a, dtype=np.float64)
                for a in (u, l, c, img_u, img_l, ximg, values, slopes)]
        self.keep = arrs
        cdef double[::1] mv
        mv = arrs[0]
        self.T.n = mv.shape[0]
        self.T.u = &mv[0] if mv.shape[0] else NULL
        mv = arrs[1]
        self.T.l = &mv[0] if mv.shape[0] else NULL
        mv = arrs[2]
        self.T.c = &mv[0] if mv.shape[0] else NULL
        mv = arrs[3]
        self.T.img_u = &mv[0] if mv.shape[0] else NULL
        mv = arrs[4]
        self.T.img_l = &mv[0] if mv.shape[0] else NULL
        mv = arrs[5]
        self.T.ximg = &mv[0] if mv.shape[0] else NULL
        mv = arrs[6]
        self.T.values = &mv[0]
        mv = arrs[7]
        self.T.slopes = &mv[0]
        self.T.extra_x = extra_x
        self.T.extra_l = extra_l
        self.T.mass = mass
        self.T.alpha = alpha
        self.T.h = h
        self.T.panels = panels
        self.T.edge = edge
        self.T.total = total


def prepare(raw):
    return _Prepared(raw)


def denjoy_eval(y, _Prepared P):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(np.asarray(y, dtype=np.float64).ravel())
    cdef Py_ssize_t m = flat.shape[0]
    cdef cnp.ndarray[double, ndim=1] gy = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] dg = np.empty(m)
    cdef double[::1] fv = flat
    cdef double[::1] gv = gy
    cdef double[::1] dv = dg
    cdef Py_ssize_t i
    cdef double d
    with nogil:
        for i in range(m):
            gv[i] = _step(fv[i], &P.T, &d)
            dv[i] = d
    shape = np.shape(y)
    return gy.reshape(shape), dg.reshape(shape)


def denjoy_orbit(double y0, Py_ssize_t n, _Prepared P, bint store=False):
    cdef double y = _mod1(y0)
    cdef double disp = 0.0
    cdef double logd = 0.0
    cdef double gy, d
    cdef double alpha = P.T.alpha
    cdef Py_ssize_t k
    orbit = np.empty(n + 1) if store else None
    cdef double[::1] ov
    if store:
        ov = orbit
        ov[0] = y
    with nogil:
        for k in range(n):
            gy = _step(y, &P.T, &d)
            disp += _mod1(gy - y - alpha + 0.5) - 0.5 + alpha
            logd += log(d)
            y = gy
            if store:
                ov[k + 1] = y
    return y, disp, logd, orbit
