"""Neimark-Sacker normal form ``(r, theta, t) -> ((1+mu) r - a r^3 + ..., theta + beta + ..., gamma t)``
with invariant-circle solving, crossing detection and cubic-coefficient fits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np
from scipy.optimize import brentq

from .errors import IllConditioned, NewtonDivergence, NoConvergence, NoCrossing, NotBorn
from .mapcore import Box, SmoothMap3, eigenvalues3, find_periodic_orbit

__all__ = [
    "Remainder",
    "PolynomialRemainder",
    "HopfFamilyParams",
    "hopf_domain",
    "hopf_map",
    "InvariantCircle",
    "invariant_circle",
    "NSReport",
    "ns_scan",
    "write_ns_csv",
    "CubicFit",
    "estimate_cubic_coeff",
    "RESONANCE_WINDOW",
]

RESONANCE_WINDOW = 1e-3
FIXED_BOX_RADIUS = 0.2


class Remainder(Protocol):
    """Higher-order terms: radial ``h_r(r) = O(r^4)`` and angular ``h_theta(r) = O(r^2)``.

    ``radial(r, mu)`` returns ``(h_r / r, d/dr(h_r / r) / r)`` and
    ``angular(r, mu)`` returns ``(h_theta, h_theta' / r)``; both pairs must
    stay finite at ``r = 0``.
    """

    def radial(self, r, mu): ...

    def angular(self, r, mu): ...


@dataclass(frozen=True)
class PolynomialRemainder:
    """``h_r = radial_coeff * r^4``, ``h_theta = angular_coeff * r^2``."""

    radial_coeff: float = 0.0
    angular_coeff: float = 0.0

    def radial(self, r, mu):
        c = self.radial_coeff
        return c * r ** 3, 3.0 * c * r

    def angular(self, r, mu):
        d = self.angular_coeff
        return d * r ** 2, 2.0 * d * np.ones_like(r)


@dataclass(frozen=True)
class HopfFamilyParams:
    mu: float
    a: float = 1.0
    beta: float = 2 * math.pi * (math.sqrt(5) - 1) / 2
    gamma: float = 0.5
    period: int = 1
    higher_order: Remainder | None = None

    def __post_init__(self):
        if not 0.0 < abs(self.gamma) < 1.0:
            raise ValueError("need 0 < |gamma| < 1")
        if self.period < 1:
            raise ValueError("period must be a positive integer")

    @property
    def truncated(self) -> bool:
        return self.higher_order is None

    def radial(self, r):
        """Radial return map ``R(r)`` and its derivative."""
        r = np.asarray(r, dtype=float)
        val = (1 + self.mu) * r - self.a * r ** 3
        der = (1 + self.mu) - 3 * self.a * r ** 2
        if self.higher_order is not None:
            q, dq_over_r = self.higher_order.radial(r, self.mu)
            val = val + q * r
            der = der + q + dq_over_r * r * r
        return val, der

    def phase(self, r):
        r = np.asarray(r, dtype=float)
        if self.higher_order is None:
            return self.beta + 0.0 * r
        h, _ = self.higher_order.angular(r, self.mu)
        return self.beta + h


def hopf_domain(params: HopfFamilyParams) -> Box:
    if params.mu > 0 and params.a > 0:
        w = 2.0 * math.sqrt(params.mu / params.a)
    else:
        w = 1.5 * FIXED_BOX_RADIUS
    return Box((-w, -w, -2.0), (w, w, 2.0))


def hopf_map(params: HopfFamilyParams, domain=None) -> SmoothMap3:
    """Cartesian form ``(x, y, t) -> rho(r) R(phi(r)) (x, y), gamma t``.

    ``rho = R(r) / r`` and ``phi`` are even in ``r``, so the map and its
    Jacobian are evaluated without dividing by ``r``.
    """
    p = params
    ho = p.higher_order

    def parts(X):
        x, y = X[..., 0], X[..., 1]
        r2 = x * x + y * y
        r = np.sqrt(r2)
        rho = (1 + p.mu) - p.a * r2
        drho_over_r = -2.0 * p.a * np.ones_like(r)
        phi = p.beta + 0.0 * r
        dphi_over_r = np.zeros_like(r)
        if ho is not None:
            q, dq = ho.radial(r, p.mu)
            rho = rho + q
            drho_over_r = drho_over_r + dq
            h, dh = ho.angular(r, p.mu)
            phi = phi + h
            dphi_over_r = dphi_over_r + dh
        return x, y, rho, drho_over_r, phi, dphi_over_r

    def f(X):
        X = np.asarray(X, dtype=float)
        x, y, rho, _, phi, _ = parts(X)
        c, s = np.cos(phi), np.sin(phi)
        out = np.empty_like(X)
        out[..., 0] = rho * (c * x - s * y)
        out[..., 1] = rho * (s * x + c * y)
        out[..., 2] = p.gamma * X[..., 2]
        return out

    def jac(X):
        X = np.asarray(X, dtype=float)
        x, y, rho, drho, phi, dphi = parts(X)
        c, s = np.cos(phi), np.sin(phi)
        # R X and R(phi + pi/2) X
        rx, ry = c * x - s * y, s * x + c * y
        px, py = -ry, rx
        J = np.zeros(X.shape[:-1] + (3, 3))
        J[..., 0, 0] = rho * c + drho * rx * x + rho * dphi * px * x
        J[..., 0, 1] = -rho * s + drho * rx * y + rho * dphi * px * y
        J[..., 1, 0] = rho * s + drho * ry * x + rho * dphi * py * x
        J[..., 1, 1] = rho * c + drho * ry * y + rho * dphi * py * y
        J[..., 2, 2] = p.gamma
        return J

    label = "hopf-truncated" if p.truncated else "hopf"
    return SmoothMap3(f, jac, domain=hopf_domain(p) if domain is None else domain,
                      label=label, meta={"params": p})


@dataclass
class InvariantCircle:
    radius: float
    radial_multiplier: float
    normal_multiplier: float
    rotation: float
    attracting: bool
    newton_steps: int = 0


def invariant_circle(params: HopfFamilyParams, tol: float = 1e-14, max_iter: int = 50) -> InvariantCircle:
    """Attracting circle ``R(r*) = r*`` born for ``mu > 0``."""
    p = params
    if p.mu <= 0.0:
        raise NotBorn(f"no invariant circle for mu={p.mu} <= 0")
    r = math.sqrt(p.mu / p.a)
    steps = 0
    if not p.truncated:
        for steps in range(1, max_iter + 1):
            # solve R(r)/r = 1, well conditioned away from r = 0
            q, dq = p.higher_order.radial(r, p.mu)
            g = p.mu - p.a * r * r + float(q)
            dg = -2.0 * p.a * r + float(dq) * r
            if dg == 0.0 or not math.isfinite(g):
                raise NewtonDivergence("degenerate radial derivative")
            step = g / dg
            r -= step
            if not math.isfinite(r) or r <= 0.0:
                raise NewtonDivergence(f"radial Newton left r > 0 (r={r})")
            if abs(step) <= tol * max(1.0, r):
                break
        else:
            raise NewtonDivergence("radial Newton did not converge")
    _, der = p.radial(r)
    radial_mult = float(der)
    rot = float(p.phase(r))
    attracting = abs(radial_mult) < 1.0 and abs(p.gamma) < 1.0
    return InvariantCircle(r, radial_mult, p.gamma, rot, attracting, steps)


@dataclass
class NSReport:
    mu_star: float
    multiplier: complex
    modulus_slope: float
    strong_resonance: bool
    resonance_order: int | None
    path: list = field(default_factory=list)


def _pair(mults) -> complex:
    nonreal = [m for m in mults if abs(m.imag) > 1e-14]
    if nonreal:
        m = max(nonreal, key=lambda z: (z.imag > 0, abs(z)))
        return complex(m.real, abs(m.imag))
    return complex(min(mults, key=lambda z: abs(abs(z) - 1.0)))


def _resonance(arg: float, window: float = RESONANCE_WINDOW):
    for k in range(1, 5):
        v = math.remainder(k * arg, 2 * math.pi)
        if abs(v) <= window:
            return k
    return None


def ns_scan(family, mu_range=(-0.05, 0.05), period: int = 1, grid: int = 21,
            seed=(1e-3, 1e-3, 1e-3), tol: float = 1e-10, slope_step: float = 1e-6) -> NSReport:
    """Locate the parameter where the complex multiplier pair of the
    continued fixed point crosses the unit circle.

    ``family`` maps ``mu`` to a :class:`SmoothMap3`, or is a
    :class:`HopfFamilyParams` whose ``mu`` is varied.
    """
    if isinstance(family, HopfFamilyParams):
        base = family
        family = lambda mu: hopf_map(replace(base, mu=mu))  # noqa: E731

    guess = [np.asarray(seed, dtype=float)]

    def pair_at(mu):
        fmap = family(mu)
        pp = find_periodic_orbit(fmap, guess[0], period)
        guess[0] = pp.location
        return _pair(eigenvalues3(pp.period_jacobian))

    mus = np.linspace(mu_range[0], mu_range[1], grid)
    path = []
    crossing = None
    prev = None
    for mu in mus:
        try:
            m = pair_at(float(mu))
        except NoConvergence as exc:
            raise NoCrossing(f"fixed-point continuation failed at mu={mu}: {exc}") from exc
        path.append((float(mu), m.real, m.imag, abs(m)))
        val = abs(m) - 1.0
        if prev is not None and crossing is None and (prev[1] < 0.0) != (val < 0.0):
            crossing = (prev[0], float(mu))
        if val == 0.0 and crossing is None:
            crossing = (float(mu), float(mu))
        prev = (float(mu), val)
    if crossing is None:
        raise NoCrossing("multiplier modulus does not cross 1 on the scanned range")
    lo, hi = crossing
    guess[0] = np.asarray(seed, dtype=float)
    if lo == hi:
        mu_star = lo
    else:
        mu_star = brentq(lambda mu: abs(pair_at(mu)) - 1.0, lo, hi, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
    m_star = pair_at(mu_star)
    slope = (abs(pair_at(mu_star + slope_step)) - abs(pair_at(mu_star - slope_step))) / (2 * slope_step)
    k = _resonance(math.atan2(m_star.imag, m_star.real))
    return NSReport(float(mu_star), m_star, float(slope), k is not None, k, path)


def write_ns_csv(report: NSReport, path, fmt: str = ".17g"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu", "re_mult", "im_mult", "modulus"])
        for row in report.path:
            w.writerow([format(v, fmt) for v in row])


@dataclass
class CubicFit:
    a: float
    mu: float
    residual: float
    condition: float


def estimate_cubic_coeff(fmap: SmoothMap3 | Callable, center=(0.0, 0.0, 0.0), samples: int = 40,
                         r_min: float = 1e-3, r_max: float = 0.05, angle: float = 0.0,
                         max_condition: float = 1e10) -> CubicFit:
    """Least-squares fit ``r' = (1 + mu) r - a r^3`` on log-spaced radii."""
    c = np.asarray(center, dtype=float)
    radii = np.geomspace(r_min, r_max, samples)
    pts = c + np.stack([radii * math.cos(angle), radii * math.sin(angle), np.zeros_like(radii)], axis=1)
    img = np.asarray(fmap(pts))
    r_out = np.hypot(img[:, 0] - c[0], img[:, 1] - c[1])
    A = np.stack([radii, -radii ** 3], axis=1)
    scale = np.linalg.norm(A, axis=0)
    cond = float(np.linalg.cond(A / scale))
    if not cond <= max_condition:
        raise IllConditioned(f"cubic fit condition number {cond:.3g} exceeds {max_condition:.3g}")
    coef, *_ = np.linalg.lstsq(A / scale, r_out, rcond=None)
    coef = coef / scale
    resid = float(np.max(np.abs(A @ coef - r_out)))
    return CubicFit(a=float(coef[1]), mu=float(coef[0] - 1.0), residual=resid, condition=cond)
