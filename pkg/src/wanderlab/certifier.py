"""Wandering-domain model over a Denjoy circle and its numerical certificate.

The model is the skew product

    (r, theta, t) -> (R(r), 2 pi g(theta / 2 pi), gamma t)

where ``R`` is the radial return map of the Hopf normal form (fixed circle
``r = r*``) and ``g`` the Denjoy map.  Tubes ``D_i`` are unions of normal
disks of radius ``delta`` over the wandering arcs ``I_i`` embedded at ``r*``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .denjoy import (DenjoyMap, circle_distance, circle_lyapunov, minimal_set_sample,
                     orbit_density, periodic_exclusion)
from .errors import DeltaTooLarge, HorizonBeyondTable
from .hopf import HopfFamilyParams, invariant_circle
from .mapcore import Annulus, SmoothMap3, UnionDomain, _default_step

__all__ = [
    "assemble_wandering_model",
    "Tube",
    "admissible_delta",
    "make_tubes",
    "ContainmentResult",
    "check_containment",
    "CertifyOptions",
    "WanderingCertificate",
    "certify",
    "write_certificate",
]

TWO_PI = 2.0 * math.pi
# angular slack (in turns) when matching the image of an arc endpoint with
# the next arc endpoint; the construction makes them equal up to rounding
ANGLE_SLACK = 1e-13


def _copy_centers(n: int, radius: float) -> np.ndarray:
    spacing = 4.0 * radius
    return np.array([[j * spacing, 0.0, 0.0] for j in range(n)])


def assemble_wandering_model(hopf: HopfFamilyParams, denjoy: DenjoyMap, fd_tol: float = 1e-7) -> SmoothMap3:
    """Skew product of the Hopf radial dynamics over the Denjoy circle map.

    For ``period > 1`` the map moves copy ``j`` rigidly onto copy ``j + 1``
    and applies the skew product on the way back to copy 0, so the
    ``period``-th iterate restricted to copy 0 is the skew product itself.
    """
    circle = invariant_circle(hopf)
    rs = circle.radius
    n = hopf.period
    centers = _copy_centers(n, rs)
    gamma = hopf.gamma

    def which(X):
        if n == 1:
            return np.zeros(X.shape[:-1], dtype=int)
        j = np.rint(X[..., 0] / (4.0 * rs)).astype(int)
        return np.clip(j, 0, n - 1)

    def skew(P):
        x, y, t = P[..., 0], P[..., 1], P[..., 2]
        r = np.hypot(x, y)
        theta = np.mod(np.arctan2(y, x) / TWO_PI, 1.0)
        R, _ = hopf.radial(r)
        gth, _ = denjoy.eval(theta)
        out = np.empty_like(P)
        out[..., 0] = R * np.cos(TWO_PI * gth)
        out[..., 1] = R * np.sin(TWO_PI * gth)
        out[..., 2] = gamma * t
        return out

    def skew_jac(P):
        x, y = P[..., 0], P[..., 1]
        r2 = x * x + y * y
        r = np.sqrt(r2)
        theta = np.mod(np.arctan2(y, x) / TWO_PI, 1.0)
        R, dR = hopf.radial(r)
        gth, dg = denjoy.eval(theta)
        c, s = np.cos(TWO_PI * gth), np.sin(TWO_PI * gth)
        # d(r)/d(x,y) = (x, y)/r ; d(theta)/d(x,y) = (-y, x)/(2 pi r^2)
        drx, dry = x / r, y / r
        dtx, dty = -y / r2, x / r2          # times 2 pi already absorbed
        J = np.zeros(P.shape[:-1] + (3, 3))
        J[..., 0, 0] = dR * c * drx - R * s * dg * dtx
        J[..., 0, 1] = dR * c * dry - R * s * dg * dty
        J[..., 1, 0] = dR * s * drx + R * c * dg * dtx
        J[..., 1, 1] = dR * s * dry + R * c * dg * dty
        J[..., 2, 2] = gamma
        return J

    def f(X):
        X = np.asarray(X, dtype=float)
        j = which(X)
        P = X - centers[j]
        last = j == n - 1
        out = P + centers[np.minimum(j + 1, n - 1)]
        if np.ndim(last) == 0:
            return skew(P) + centers[0] if last else out
        if np.any(last):
            out[last] = skew(P[last]) + centers[0]
        return out

    def jac(X):
        X = np.asarray(X, dtype=float)
        j = which(X)
        P = X - centers[j]
        last = j == n - 1
        J = np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3)).copy()
        if np.ndim(last) == 0:
            return skew_jac(P) if last else J
        if np.any(last):
            J[last] = skew_jac(P[last])
        return J

    def fd_step(X):
        X = np.asarray(X, dtype=float)
        h0 = _default_step(X)
        if which(X) != n - 1:
            return h0
        P = X - centers[which(X)]
        r = math.hypot(P[0], P[1])
        theta = (math.atan2(P[1], P[0]) / TWO_PI) % 1.0
        # a Cartesian step h moves the angle by at most h / (2 pi r) turns
        hy = denjoy.safe_step(theta, h0 / (TWO_PI * r), tol=fd_tol)
        return min(h0, hy * TWO_PI * r)

    parts = tuple(Annulus(0.5 * rs, 1.5 * rs, -1.0, 1.0, center=tuple(c)) for c in centers)
    domain = parts[0] if n == 1 else UnionDomain(parts)
    meta = {"hopf": hopf, "denjoy": denjoy, "radius": rs, "period": n,
            "centers": centers, "radial_multiplier": circle.radial_multiplier}
    return SmoothMap3(f, jac, domain=domain, label="wandering-skew", fd_step=fd_step, meta=meta)


def _iterate_period(model: SmoothMap3, X, n: int):
    for _ in range(n):
        X = model.eval(X)
    return X


@dataclass(frozen=True)
class Tube:
    """``D_i``: normal disks of radius ``delta`` over the arc ``(u, v)`` (turns)
    embedded at radius ``radius`` around ``center``."""

    index: int
    base_arc: tuple
    delta: float
    radius: float
    center: tuple = (0.0, 0.0, 0.0)

    def points(self, theta, rho, phi) -> np.ndarray:
        """Points at arc parameter ``theta`` in [0, 1], normal radius ``rho``, normal angle ``phi``."""
        theta, rho, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (theta, rho, phi)))
        u, v = self.base_arc
        ang = TWO_PI * (u + theta * (v - u))
        r = self.radius + rho * np.cos(phi)
        out = np.stack([r * np.cos(ang), r * np.sin(ang), rho * np.sin(phi)], axis=-1)
        return out + np.asarray(self.center)

    def boundary(self, n_arc: int = 65, n_circle: int = 32, n_cap: int = 4) -> np.ndarray:
        """Lateral surface on an ``n_arc x n_circle`` grid plus the two end disks."""
        th = np.linspace(0.0, 1.0, n_arc)
        ph = np.arange(n_circle) * (TWO_PI / n_circle)
        T, P = np.meshgrid(th, ph, indexing="ij")
        lateral = self.points(T, self.delta, P).reshape(-1, 3)
        rho = self.delta * np.arange(n_cap) / n_cap
        Tc, Rc, Pc = np.meshgrid([0.0, 1.0], rho, ph, indexing="ij")
        caps = self.points(Tc, Rc, Pc).reshape(-1, 3)
        return np.concatenate([lateral, caps])

    def signed_margin(self, X) -> np.ndarray:
        """Fibrewise distance to the complement: ``delta - |normal offset|``
        over the closed arc, negative (minus the arc distance) off it."""
        P = np.asarray(X, dtype=float) - np.asarray(self.center)
        r = np.hypot(P[..., 0], P[..., 1])
        theta = np.mod(np.arctan2(P[..., 1], P[..., 0]) / TWO_PI, 1.0)
        u, v = self.base_arc
        off = np.mod(theta - u + ANGLE_SLACK, 1.0) - ANGLE_SLACK
        on_arc = off <= (v - u) + ANGLE_SLACK
        normal = np.hypot(r - self.radius, P[..., 2])
        arc_miss = np.minimum(circle_distance(theta, u), circle_distance(theta, v)) * TWO_PI * self.radius
        return np.where(on_arc, self.delta - normal, -np.maximum(arc_miss, normal - self.delta))


def _arc_gaps(arcs) -> np.ndarray:
    """Circular distances (turns) between consecutive arcs in circle order."""
    arcs = np.asarray(arcs, dtype=float)
    order = np.argsort(arcs[:, 0])
    a = arcs[order]
    nxt = np.roll(a[:, 0], -1)
    nxt[-1] += 1.0
    return nxt - a[:, 1]


def admissible_delta(denjoy: DenjoyMap, radius: float, count: int) -> float:
    """Half the smallest chord between the embedded arcs ``I_0 .. I_{count-1}``."""
    arcs = [denjoy.gap(i) for i in range(count)]
    gaps = _arc_gaps(arcs)
    chord = 2.0 * radius * np.sin(math.pi * np.clip(gaps, 0.0, 0.5))
    return 0.5 * float(np.min(chord))


def make_tubes(denjoy: DenjoyMap, radius: float, delta: float, count: int,
               center=(0.0, 0.0, 0.0)) -> list[Tube]:
    if denjoy.n_gaps == 0:
        raise ValueError("a map without wandering arcs has no tubes")
    if count < 1 or count > denjoy.i_max:
        raise HorizonBeyondTable(f"tube count {count} outside 1..{denjoy.i_max}")
    dmax = admissible_delta(denjoy, radius, count)
    if not 0.0 < delta < dmax:
        raise DeltaTooLarge(delta, dmax)
    center = tuple(float(c) for c in center)
    return [Tube(i, denjoy.gap(i), float(delta), float(radius), center) for i in range(count)]


@dataclass
class ContainmentResult:
    margins: np.ndarray
    stabilized: np.ndarray
    levels: np.ndarray

    @property
    def verdict(self) -> str:
        if np.any(self.margins <= 0.0):
            return "fail"
        if not np.all(self.stabilized):
            return "inconclusive"
        return "pass"


def check_containment(model: SmoothMap3, tubes: list[Tube], n: int = 1, n_arc: int = 65,
                      n_circle: int = 32, max_refine: int = 3, rel_tol: float = 0.1) -> ContainmentResult:
    """Margins ``m_i`` of ``model^n(D_i)`` inside ``D_{i+1}``.

    Each boundary grid is refined by doubling (nested grids, so margins never
    increase) until two successive estimates agree within ``rel_tol``.
    """
    count = len(tubes) - 1
    margins = np.empty(count)
    stable = np.zeros(count, dtype=bool)
    levels = np.zeros(count, dtype=int)
    for i in range(count):
        src, dst = tubes[i], tubes[i + 1]
        na, nc = n_arc, n_circle
        prev = float(np.min(dst.signed_margin(_iterate_period(model, src.boundary(na, nc), n))))
        for lev in range(1, max_refine + 1):
            na, nc = 2 * na - 1, 2 * nc
            cur = min(prev, float(np.min(dst.signed_margin(_iterate_period(model, src.boundary(na, nc), n)))))
            levels[i] = lev
            done = abs(cur - prev) <= rel_tol * abs(cur)
            prev = cur
            if done:
                stable[i] = True
                break
        margins[i] = prev
    return ContainmentResult(margins, stable, levels)


@dataclass
class CertifyOptions:
    horizon: int = 1000
    max_period: int = 50
    diameter_tol: float = 1e-6
    diameter_grid: tuple = (17, 16)
    omega_seeds: int = 20
    omega_start: int = 10_000
    omega_stop: int = 100_000
    omega_stride: int = 1000
    resolution: float = 1e-3
    lyapunov_iterates: int = 100_000
    lyapunov_tol: float = 1e-2
    density_iterates: int = 1_000_000
    density_eps: float = 1e-3
    seed: int = 0


@dataclass
class WanderingCertificate:
    horizon: int
    containment_margins: np.ndarray
    containment_stable: np.ndarray
    disjoint: bool
    diameters: np.ndarray
    k0: int | None
    decay_rate: float
    decay_constant: float
    omega_rows: list
    omega_distance: float
    omega_threshold: float
    lyapunov: float
    normal_exponents: tuple
    periodic_displacement: np.ndarray
    density_distance: float
    verdicts: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.verdicts.get("certificate", "fail")


def _arcs_disjoint(tubes: list[Tube]) -> bool:
    by_center: dict = {}
    for tb in tubes:
        by_center.setdefault(tb.center, []).append(tb.base_arc)
    for arcs in by_center.values():
        if len(arcs) > 1 and np.any(_arc_gaps(arcs) <= 0.0):
            return False
    return True


def _orbit_copies_disjoint(model: SmoothMap3) -> bool:
    centers = model.meta["centers"]
    if len(centers) < 2:
        return True
    d = pdist(centers)
    return bool(np.min(d) > 3.0 * model.meta["radius"])


def _diameters(model: SmoothMap3, tube: Tube, n: int, N: int, grid) -> np.ndarray:
    X = tube.boundary(*grid)
    out = np.empty(N + 1)
    out[0] = float(np.max(pdist(X)))
    for k in range(1, N + 1):
        X = _iterate_period(model, X, n)
        out[k] = float(np.max(pdist(X)))
    return out


def _decay(diams: np.ndarray, rate_floor: float):
    """First index after which the sequence strictly decreases, and the
    constant ``C`` with ``diam_k <= C rho^k`` beyond it."""
    dec = diams[1:] < diams[:-1]
    if not dec[-1]:
        return None, float("nan"), float("nan")
    bad = np.nonzero(~dec)[0]
    k0 = int(bad[-1] + 1) if len(bad) else 0
    ks = np.arange(k0, len(diams))
    ratios = diams[k0 + 1:] / diams[k0:-1]
    rho = max(rate_floor, float(np.max(ratios))) if len(ratios) else rate_floor
    C = float(np.max(diams[k0:] / rho ** ks))
    return k0, rho, C


def _omega(model: SmoothMap3, tube: Tube, n: int, opts: CertifyOptions, K):
    rng = np.random.default_rng(opts.seed)
    m = opts.omega_seeds
    theta = rng.uniform(0.0, 1.0, m)
    rho = tube.delta * np.sqrt(rng.uniform(0.0, 1.0, m))
    phi = rng.uniform(0.0, TWO_PI, m)
    X = tube.points(theta, rho, phi)
    pts = np.sort(K.points)
    rs = tube.radius
    center = np.asarray(tube.center)
    worst = np.zeros(m)
    worst_k = np.zeros(m, dtype=int)
    rows = []

    def dist(X):
        P = X - center
        r = np.hypot(P[:, 0], P[:, 1])
        th = np.mod(np.arctan2(P[:, 1], P[:, 0]) / TWO_PI, 1.0)
        j = np.searchsorted(pts, th)
        left = pts[(j - 1) % len(pts)]
        right = pts[j % len(pts)]
        ang = np.minimum(circle_distance(th, left), circle_distance(th, right))
        return np.sqrt((TWO_PI * rs * ang) ** 2 + (r - rs) ** 2 + P[:, 2] ** 2)

    for k in range(1, opts.omega_stop + 1):
        X = _iterate_period(model, X, n)
        if k < opts.omega_start:
            continue
        d = dist(X)
        up = d > worst
        worst[up] = d[up]
        worst_k[up] = k
        if (k - opts.omega_start) % opts.omega_stride == 0:
            rows.extend((s, k, float(d[s])) for s in range(m))
    for s in range(m):
        rows.append((s, int(worst_k[s]), float(worst[s])))
    rows = sorted(set(rows), key=lambda row: (row[0], row[1]))
    return rows, float(np.max(worst))


def certify(model: SmoothMap3, tubes: list[Tube], denjoy: DenjoyMap, horizon: int | None = None,
            period: int | None = None, options: CertifyOptions | None = None) -> WanderingCertificate:
    opts = options or CertifyOptions()
    N = opts.horizon if horizon is None else int(horizon)
    n = model.meta.get("period", 1) if period is None else int(period)
    if N >= denjoy.i_max:
        raise HorizonBeyondTable(f"horizon {N} beyond the built table (i_max={denjoy.i_max})")
    if len(tubes) < N + 1:
        raise HorizonBeyondTable(f"need {N + 1} tubes for horizon {N}, got {len(tubes)}")
    hopf: HopfFamilyParams = model.meta["hopf"]
    radial = abs(model.meta["radial_multiplier"])

    cont = check_containment(model, tubes[:N + 1], n)
    disjoint = _arcs_disjoint(tubes[:N + 1]) and _orbit_copies_disjoint(model)

    diams = _diameters(model, tubes[0], n, N, opts.diameter_grid)
    ratio_sup = float(np.max(denjoy.gaps.lengths(np.arange(1, N + 1)) / denjoy.gaps.lengths(np.arange(0, N))))
    k0, rho, C = _decay(diams, max(radial, abs(hopf.gamma), ratio_sup))
    contracting = k0 is not None and k0 < N and diams[-1] < opts.diameter_tol

    K = minimal_set_sample(denjoy, opts.resolution)
    omega_rows, omega_dist = _omega(model, tubes[0], n, opts, K)
    omega_thr = K.tail_deficit + opts.resolution

    lyap = circle_lyapunov(denjoy, 0.0, opts.lyapunov_iterates).value
    normal = (math.log(radial), math.log(abs(hopf.gamma)))
    displacement = periodic_exclusion(denjoy, K.points, opts.max_period)
    density = orbit_density(denjoy, K.points, eps=opts.density_eps, iterates=opts.density_iterates)

    v = {
        "containment": cont.verdict,
        "disjoint": "pass" if disjoint else "fail",
        "contracting": "pass" if contracting else "fail",
        "omega_limit": "pass" if omega_dist < omega_thr else "fail",
        "nonhyperbolic": "pass" if abs(lyap) < opts.lyapunov_tol and max(normal) < 0.0 else "fail",
        "no_periodic": "pass" if np.all(displacement > 0.0) else "fail",
        "transitive_heuristic": "pass" if density.covered else "inconclusive",
    }
    hard = [v[k] for k in ("containment", "disjoint", "contracting", "omega_limit", "nonhyperbolic", "no_periodic")]
    if "fail" in hard:
        v["certificate"] = "fail"
    elif "inconclusive" in hard:
        v["certificate"] = "inconclusive"
    else:
        v["certificate"] = "pass"
    return WanderingCertificate(
        horizon=N, containment_margins=cont.margins, containment_stable=cont.stabilized,
        disjoint=disjoint, diameters=diams, k0=k0, decay_rate=rho, decay_constant=C,
        omega_rows=omega_rows, omega_distance=omega_dist, omega_threshold=omega_thr,
        lyapunov=float(lyap), normal_exponents=normal, periodic_displacement=displacement,
        density_distance=density.worst_distance, verdicts=v)


def write_certificate(cert: WanderingCertificate, out_dir, fmt: str = ".17g"):
    os.makedirs(out_dir, exist_ok=True)

    def table(name, header, rows):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, (int, np.integer)) else format(float(v), fmt) for v in row])

    table("margins.csv", ["i", "m_i"], ((i, m) for i, m in enumerate(cert.containment_margins)))
    table("diameters.csv", ["k", "diam"], ((k, d) for k, d in enumerate(cert.diameters)))
    table("omega.csv", ["seed", "k", "dist"], cert.omega_rows)
    with open(os.path.join(out_dir, "verdict.txt"), "w") as fh:
        for key, val in cert.verdicts.items():
            fh.write(f"{key}: {val}\n")
