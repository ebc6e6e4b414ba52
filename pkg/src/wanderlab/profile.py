"""Flat-top C-infinity bump profile and its cumulative integral.

The same profile is used for compactly supported perturbations, for
blending the pieces of a cycle model, and as the shape of the derivative
correction inside each Denjoy gap.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "flat_top",
    "flat_top_deriv",
    "gap_weight",
    "gap_weight_integral",
    "GAP_TABLE",
]


def flat_top(s, inner: float, outer: float):
    """Return 1 for ``s <= inner``, 0 for ``s >= outer`` and a smooth
    exponential transition ``exp(1 - 1/(1 - u**2))`` in between, with
    ``u = (s - inner) / (outer - inner)``.

    The plateaus are clamped so that both 0 and 1 are exact.
    """
    s = np.asarray(s, dtype=float)
    u = (s - inner) / (outer - inner)
    out = np.zeros_like(u)
    out[u <= 0.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - um * um))
    return out if out.ndim else float(out)


def flat_top_deriv(s, inner: float, outer: float):
    """Derivative of :func:`flat_top` with respect to ``s``."""
    s = np.asarray(s, dtype=float)
    width = outer - inner
    u = (s - inner) / width
    out = np.zeros_like(u)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    one_m = 1.0 - um * um
    out[mid] = np.exp(1.0 - 1.0 / one_m) * (-2.0 * um / (one_m * one_m)) / width
    return out if out.ndim else float(out)


def gap_weight(tau):
    """Normalized gap profile on [0, 1]: zero at both ends, one on [1/4, 3/4]."""
    tau = np.asarray(tau, dtype=float)
    return flat_top(np.abs(tau - 0.5), 0.25, 0.5)


class _GapIntegralTable:
    """Cumulative integral of :func:`gap_weight` by piecewise cubic Hermite
    interpolation of Gauss-Legendre panel sums over the rising edge
    [0, 1/4]; the plateau and the falling edge follow by symmetry.
    """

    def __init__(self, panels: int = 4096, order: int = 12):
        self.panels = panels
        self.h = 0.25 / panels
        nodes = np.linspace(0.0, 0.25, panels + 1)
        gx, gw = np.polynomial.legendre.leggauss(order)
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        pts = mids[:, None] + 0.5 * self.h * gx[None, :]
        panel_sums = 0.5 * self.h * (gap_weight(pts) * gw[None, :]).sum(axis=1)
        self.values = np.concatenate([[0.0], np.cumsum(panel_sums)])
        self.slopes = gap_weight(nodes)
        # integral of the rising edge, and of the whole profile
        self.edge = float(self.values[-1])
        self.total = 0.5 + 2.0 * self.edge

    def _edge(self, tau):
        x = tau / self.h
        j = np.minimum(np.floor(x).astype(np.int64), self.panels - 1)
        j = np.maximum(j, 0)
        t = x - j
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return (h00 * self.values[j] + h10 * self.h * self.slopes[j]
                + h01 * self.values[j + 1] + h11 * self.h * self.slopes[j + 1])

    def __call__(self, tau):
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
        out = np.where(
            tau <= 0.25,
            self._edge(np.minimum(tau, 0.25)),
            np.where(tau < 0.75, self.edge + (tau - 0.25),
                     self.total - self._edge(np.minimum(1.0 - tau, 0.25))),
        )
        return out if out.ndim else float(out)


GAP_TABLE = _GapIntegralTable()


def gap_weight_integral(tau):
    """Integral of :func:`gap_weight` from 0 to ``tau``."""
    return GAP_TABLE(tau)
