"""Pure-Python/numpy versions of the Denjoy circle-map kernels.

Semantics are identical to ``_ckernels.pyx``; this module is used when the
compiled extension is unavailable and as the reference side of the
benchmark.
"""
from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np


def _edge(tau, values, slopes, h, panels):
    x = tau / h
    j = int(x)
    if j >= panels:
        j = panels - 1
    t = x - j
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * values[j] + (t3 - 2 * t2 + t) * h * slopes[j]
            + (-2 * t3 + 3 * t2) * values[j + 1] + (t3 - t2) * h * slopes[j + 1])


def _wint(tau, values, slopes, h, panels, edge, total):
    if tau <= 0.25:
        return _edge(tau, values, slopes, h, panels)
    if tau < 0.75:
        return edge + (tau - 0.25)
    return total - _edge(1.0 - tau, values, slopes, h, panels)


def _weight(tau):
    s = abs(tau - 0.5)
    if s <= 0.25:
        return 1.0
    u = (s - 0.25) / 0.25
    if u >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - u * u))


def _step(y, T):
    (u, l, c, img_u, img_l, ximg, extra_x, extra_l, mass, alpha,
     values, slopes, h, panels, edge, total) = T
    y = y % 1.0
    n = len(u)
    if n == 0:
        return (y + alpha) % 1.0, 1.0
    k = bisect_right(u, y) - 1
    if k < 0:
        k = n - 1
    uk = u[k]
    lk = l[k]
    if y <= uk + lk:
        s = y - uk
        tau = s / lk if lk > 0.0 else 0.0
        ck = c[k]
        gy = img_u[k] + s + ck * lk * _wint(tau, values, slopes, h, panels, edge, total)
        d = 1.0 + ck * _weight(tau)
    else:
        off = y - (uk + lk)
        gy = img_u[k] + img_l[k] + off
        if extra_l > 0.0:
            rel = (extra_x - ximg[k]) % 1.0
            if 0.0 < rel < off / (1.0 - mass):
                gy += extra_l
        d = 1.0
    return gy % 1.0, d


def denjoy_eval(y, T):
    """Evaluate the circle map and its derivative at every entry of ``y``."""
    (u, l, c, img_u, img_l, ximg, extra_x, extra_l, mass, alpha,
     values, slopes, h, panels, edge, total) = T[1]
    y = np.mod(np.asarray(y, dtype=float), 1.0)
    if len(u) == 0:
        return np.mod(y + alpha, 1.0), np.ones_like(y)
    k = np.searchsorted(u, y, side="right") - 1
    k = np.where(k < 0, len(u) - 1, k)
    uk = u[k]
    lk = l[k]
    ck = c[k]
    inside = y <= uk + lk
    s = y - uk
    tau = np.where(inside & (lk > 0), s / np.where(lk > 0, lk, 1.0), 0.0)
    tau = np.clip(tau, 0.0, 1.0)
    x = np.minimum(tau, 1.0 - tau)
    j = np.minimum((np.minimum(x, 0.25) / h).astype(np.int64), panels - 1)
    t = np.minimum(x, 0.25) / h - j
    t2 = t * t
    t3 = t2 * t
    e = ((2 * t3 - 3 * t2 + 1) * values[j] + (t3 - 2 * t2 + t) * h * slopes[j]
         + (-2 * t3 + 3 * t2) * values[j + 1] + (t3 - t2) * h * slopes[j + 1])
    wint = np.where(tau <= 0.25, e,
                    np.where(tau < 0.75, edge + (tau - 0.25), total - e))
    sd = np.abs(tau - 0.5)
    uu = np.clip((sd - 0.25) / 0.25, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(uu <= 0.0, 1.0,
                     np.where(uu >= 1.0, 0.0, np.exp(1.0 - 1.0 / (1.0 - uu * uu))))
    g_in = img_u[k] + s + ck * lk * wint
    d_in = 1.0 + ck * w
    off = y - (uk + lk)
    g_out = img_u[k] + img_l[k] + off
    if extra_l > 0.0:
        rel = np.mod(extra_x - ximg[k], 1.0)
        g_out = g_out + np.where((rel > 0.0) & (rel < off / (1.0 - mass)), extra_l, 0.0)
    gy = np.where(inside, g_in, g_out)
    dg = np.where(inside, d_in, 1.0)
    return np.mod(gy, 1.0), dg


def denjoy_orbit(y0, n, T, store=False):
    """Iterate ``n`` times from ``y0``.

    Returns ``(y_n, displacement_sum, log_derivative_sum, orbit)`` where the
    displacement is the lift increment normalized around the rotation
    number and ``orbit`` (only if ``store``) holds ``y_0 .. y_n``.
    """
    Tl = T[0]
    alpha = Tl[9]
    y = float(y0) % 1.0
    disp = 0.0
    logd = 0.0
    orbit = np.empty(n + 1) if store else None
    if store:
        orbit[0] = y
    for k in range(n):
        gy, d = _step(y, Tl)
        disp += ((gy - y - alpha + 0.5) % 1.0) - 0.5 + alpha
        logd += math.log(d)
        y = gy
        if store:
            orbit[k + 1] = y
    return y, disp, logd, orbit


def prepare(T):
    """Return ``(list_form, array_form)`` of a raw table tuple.

    bisect and scalar indexing are much faster on lists, batch evaluation on
    arrays; both are kept.
    """
    lists = list(T)
    arrays = list(T)
    for i in (0, 1, 2, 3, 4, 5, 10, 11):
        arrays[i] = np.ascontiguousarray(T[i], dtype=float)
        lists[i] = arrays[i].tolist()
    return tuple(lists), tuple(arrays)
