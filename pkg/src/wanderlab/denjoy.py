"""Denjoy circle diffeomorphisms with wandering intervals.

Points of the circle are parametrized by ``y`` in [0, 1).  The open gaps
``I_i = (u_i, v_i)`` of length ``l_i`` are inserted at the rotation orbit
``x_i = frac(i * alpha)`` for ``|i| <= i_max``; the map sends ``I_i`` onto
``I_{i+1}`` with derivative ``1 + c_i w(s / l_i)`` inside the gap and is a
translation (derivative 1) on the Cantor part between consecutive gaps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.special import zeta

from . import kernels
from .arith import check_irrational
from .errors import ConfigError, InfeasibleRatios, MassOverflow, NonMonotoneLift
from .profile import GAP_TABLE

__all__ = [
    "GapLaw",
    "DenjoyMap",
    "build_denjoy",
    "RotationEstimate",
    "rotation_number",
    "WanderingReport",
    "verify_wandering",
    "LyapunovEstimate",
    "circle_lyapunov",
    "MinimalSetSample",
    "minimal_set_sample",
    "periodic_exclusion",
    "orbit_density",
    "circle_distance",
    "write_endpoint_csv",
    "read_endpoint_csv",
]

RATIO_TOL = 1e-3
POSITIVITY_MARGIN = 1e-9
# sup|w''| / 6 for the gap weight, and the absolute rounding level of g
_FD_CURVATURE = 57.0
_FD_ROUNDING = 2.5e-16


def circle_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class GapLaw:
    """Gap lengths ``l_i`` for ``i`` in Z with total mass ``mass``.

    family ``power``: ``C / (|i| + 2)**p``; ``geometric``: ``C * q**|i|``;
    ``table``: explicit lengths for ``|i| <= len(table) // 2`` (centered) and
    zero beyond.
    """

    mass: float
    family: Literal["power", "geometric", "table"] = "power"
    p: float = 2.0
    q: float = 0.5
    table: tuple = ()

    def __post_init__(self):
        if self.mass >= 1.0:
            raise MassOverflow(f"total gap mass {self.mass} must be < 1")
        if self.mass < 0.0:
            raise ValueError("gap mass must be non-negative")
        if self.family == "power" and self.p <= 1.0:
            raise ValueError("power law needs p > 1")
        if self.family == "geometric" and not 0.0 < self.q < 1.0:
            raise ValueError("geometric law needs 0 < q < 1")
        if self.family == "table":
            if len(self.table) % 2 != 1:
                raise ValueError("table law needs an odd number of entries (i = -I..I)")
            if any(v < 0 for v in self.table):
                raise ValueError("table lengths must be non-negative")
            if abs(sum(self.table) - self.mass) > 1e-12:
                raise ValueError("table lengths must sum to the declared mass")
        elif self.family not in ("power", "geometric"):
            raise ValueError(f"unknown gap family {self.family!r}")

    @classmethod
    def from_lengths(cls, lengths) -> "GapLaw":
        lengths = tuple(float(v) for v in lengths)
        return cls(mass=math.fsum(lengths), family="table", table=lengths)

    @property
    def normalizer(self) -> float:
        if self.mass == 0.0 or self.family == "table":
            return 1.0
        if self.family == "power":
            p = self.p
            return self.mass / (2.0 * float(zeta(p)) - 2.0 - 2.0 ** (-p))
        return self.mass * (1.0 - self.q) / (1.0 + self.q)

    def lengths(self, i) -> np.ndarray:
        """``l_i`` for signed indices ``i``."""
        i = np.asarray(i, dtype=np.int64)
        if self.mass == 0.0:
            return np.zeros(i.shape)
        if self.family == "power":
            return self.normalizer / (np.abs(i) + 2.0) ** self.p
        if self.family == "geometric":
            return self.normalizer * self.q ** np.abs(i).astype(float)
        half = len(self.table) // 2
        arr = np.asarray(self.table, dtype=float)
        out = np.zeros(i.shape)
        ok = np.abs(i) <= half
        out[ok] = arr[i[ok] + half]
        return out

    def tail(self, i_max: int) -> float:
        """Mass of the gaps with ``|i| > i_max``."""
        if self.mass == 0.0:
            return 0.0
        if self.family == "power":
            return 2.0 * self.normalizer * float(zeta(self.p, i_max + 3))
        if self.family == "geometric":
            return 2.0 * self.normalizer * self.q ** (i_max + 1) / (1.0 - self.q)
        half = len(self.table) // 2
        if i_max >= half:
            return 0.0
        return math.fsum(self.table[: half - i_max]) + math.fsum(self.table[half + i_max + 1:])

    def limit_ratio(self) -> float:
        """Limit of ``l_{i+1} / l_i`` as ``i -> +inf`` (last table ratio for tables)."""
        if self.family == "power":
            return 1.0
        if self.family == "geometric":
            return self.q
        half = len(self.table) // 2
        if half == 0 or self.table[-2] == 0.0:
            return 1.0
        return self.table[-1] / self.table[-2]


@dataclass
class DenjoyMap:
    alpha: float
    gaps: GapLaw
    i_max: int
    cf: list
    index: np.ndarray          # orbit index of each gap, in circle order
    x: np.ndarray              # rotation coordinate of each gap, circle order
    u: np.ndarray
    l: np.ndarray
    c: np.ndarray
    img_u: np.ndarray
    img_l: np.ndarray
    ximg: np.ndarray
    extra_x: float
    extra_l: float
    retained_mass: float
    invariants: dict = field(default_factory=dict)
    backend: str | None = None

    def __post_init__(self):
        raw = (self.u, self.l, self.c, self.img_u, self.img_l, self.ximg,
               self.extra_x, self.extra_l, self.retained_mass, self.alpha,
               GAP_TABLE.values, GAP_TABLE.slopes, GAP_TABLE.h, GAP_TABLE.panels,
               GAP_TABLE.edge, GAP_TABLE.total)
        self._kern = kernels.get_backend(self.backend)
        self._tables = self._kern.prepare(raw)
        # position in circle order of gap with orbit index i
        self._pos = np.empty(len(self.index), dtype=np.int64)
        self._pos[self.index + self.i_max] = np.arange(len(self.index))

    # -- evaluation ------------------------------------------------------
    def __call__(self, y):
        return self.eval(y)[0]

    def eval(self, y):
        """Return ``(g(y), g'(y))``."""
        return self._kern.denjoy_eval(y, self._tables)

    def derivative(self, y):
        return self.eval(y)[1]

    def orbit(self, y0: float, n: int, store: bool = False):
        """Iterate ``n`` times; returns ``(y_n, lift_displacement, sum_log_derivative, orbit)``."""
        return self._kern.denjoy_orbit(float(y0), int(n), self._tables, bool(store))

    def iterate(self, y, n: int):
        y = np.asarray(y, dtype=float)
        for _ in range(n):
            y = self.eval(y)[0]
        return y

    def lift(self, y):
        """Lift ``F`` with ``F(y) - y`` close to ``alpha``."""
        y = np.asarray(y, dtype=float)
        gy = self.eval(y)[0]
        return y + np.mod(gy - np.mod(y, 1.0) - self.alpha + 0.5, 1.0) - 0.5 + self.alpha

    # -- tables ----------------------------------------------------------
    @property
    def n_gaps(self) -> int:
        return len(self.u)

    def gap(self, i: int) -> tuple[float, float]:
        """Endpoints ``(u_i, v_i)`` of gap ``i`` (``v_i`` may exceed 1 only by rounding)."""
        if abs(i) > self.i_max:
            raise IndexError(f"gap {i} outside the retained window |i| <= {self.i_max}")
        k = self._pos[i + self.i_max]
        return float(self.u[k]), float(self.u[k] + self.l[k])

    def endpoint_table(self):
        """Rows ``(i, u_i, v_i, l_i)`` ordered by ``i``."""
        order = self._pos
        i = self.index[order]
        return i, self.u[order], self.u[order] + self.l[order], self.l[order]

    def locate(self, y):
        """Index (circle order) of the gap containing ``y`` in its closure, or -1."""
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        if self.n_gaps == 0:
            return np.full(y.shape, -1)
        k = np.searchsorted(self.u, y, side="right") - 1
        k = np.where(k < 0, self.n_gaps - 1, k)
        inside = y <= self.u[k] + self.l[k]
        return np.where(inside, k, -1)

    def project_to_minimal(self, y):
        """Push points lying inside a retained gap to its left endpoint."""
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        if self.n_gaps == 0:
            return y
        k = self.locate(y)
        return np.where(k >= 0, self.u[np.maximum(k, 0)], y)

    def sup_derivative_deviation(self) -> float:
        """``sup |g' - 1|``, the C1-closeness surrogate to the rotation."""
        return float(np.max(np.abs(self.c))) if self.n_gaps else 0.0

    def safe_step(self, y: float, h0: float, tol: float = 1e-7) -> float:
        """Finite-difference step near ``y`` that resolves the gap structure.

        Inside a gap the step is a small fraction of the gap length; on the
        Cantor part it stays clear of every nearby gap whose averaged
        derivative correction would exceed ``tol``.
        """
        if self.n_gaps == 0:
            return h0
        y = float(y) % 1.0
        h = h0
        k = int(self.locate(y))
        if k >= 0:
            ck = abs(self.c[k])
            if ck > 0.0:
                # truncation error ~ frac^2 |c| K, rounding ~ eps / (frac l)
                K = _FD_CURVATURE * ck
                frac = max(math.sqrt(tol / K), (_FD_ROUNDING / (K * self.l[k])) ** (1.0 / 3.0))
                h = min(h, min(0.25, frac) * self.l[k])
        W = GAP_TABLE.total
        for _ in range(8):
            cand = self._gaps_near(y, h)
            sig = [j for j in cand if j != k and abs(self.c[j]) * self.l[j] * W > tol * 2 * h]
            if not sig:
                break
            d = min(self._edge_distance(y, j) for j in sig)
            h = min(h, 0.5 * d)
        return h

    def _gaps_near(self, y, h):
        out = []
        for yy in (y - h, y + h, y):
            k = int(self.locate(yy))
            if k >= 0:
                out.append(k)
        a = np.searchsorted(self.u, max(y - h, 0.0), side="left")
        b = np.searchsorted(self.u, min(y + h, 1.0), side="right")
        out.extend(range(a, b))
        if y - h < 0:
            out.extend(range(np.searchsorted(self.u, y - h + 1.0), self.n_gaps))
        if y + h > 1:
            out.extend(range(0, np.searchsorted(self.u, y + h - 1.0, side="right")))
        return sorted(set(out))

    def _edge_distance(self, y, j):
        a = circle_distance(y, self.u[j])
        b = circle_distance(y, self.u[j] + self.l[j])
        return float(min(a, b))


def _orbit_fractions(idx: np.ndarray, alpha: float) -> np.ndarray:
    """``frac(i * alpha)`` to within a few ulps of 1.

    The naive product loses ``log2|i|`` bits, which breaks the exact
    translation structure between neighbouring gaps.  ``alpha`` is split so
    that ``i * hi`` is exact for ``|i| < 2**26``.
    """
    hi = float(np.float32(alpha))          # 24 significant bits
    lo = alpha - hi
    fi = idx.astype(float)
    return np.mod(np.mod(fi * hi, 1.0) + fi * lo, 1.0)


def _compensated_cumsum(values) -> np.ndarray:
    """Prefix sums with Neumaier compensation.

    A plain cumulative sum over ~10^5 lengths drifts by ~1e-12, which shows
    up as a jump of ``g`` where neighbouring endpoints are rebuilt from
    prefixes of different length.
    """
    out = np.empty(len(values))
    total = 0.0
    comp = 0.0
    for j, v in enumerate(values.tolist()):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[j] = total + comp
    return out


def build_denjoy(alpha: float, gaps: GapLaw, i_max: int = 100_000, cf=None,
                 strict: bool = True, ratio_tol: float = RATIO_TOL,
                 backend: str | None = None, check: bool = True) -> DenjoyMap:
    """Insert the gaps of ``gaps`` along the orbit of the rotation by ``alpha``.

    ``strict`` demands the C1 regime ``l_{i+1} / l_i -> 1`` (limit within
    ``ratio_tol`` of one); every build requires a strictly positive
    derivative, i.e. ``c_i > -1``.
    """
    cf = check_irrational(alpha, cf)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    if gaps.mass * max(alpha, 1.0 - alpha) >= 0.5:
        raise MassOverflow("lift bookkeeping needs mass * max(alpha, 1 - alpha) < 1/2")
    W = GAP_TABLE.total
    if gaps.mass == 0.0:
        empty = np.zeros(0)
        d = DenjoyMap(alpha, gaps, i_max, cf, np.zeros(0, dtype=np.int64), empty, empty, empty,
                      empty, empty, empty, empty, 0.0, 0.0, 0.0, backend=backend)
        d.invariants = dict(endpoint_error=0.0, derivative_jump=0.0, min_derivative=1.0,
                            sup_ratio_deviation=0.0, truncation_defect=0.0, tail_mass=0.0)
        return d

    if strict and abs(gaps.limit_ratio() - 1.0) > ratio_tol:
        raise InfeasibleRatios(
            f"gap ratios tend to {gaps.limit_ratio():.6g}, not 1: the map cannot be C1 on the Cantor set")
    idx = np.arange(-i_max, i_max + 2, dtype=np.int64)
    lens = gaps.lengths(idx)
    if np.any(lens[:-1] <= 0.0):
        raise InfeasibleRatios("every retained gap needs positive length")
    ratios = lens[1:] / lens[:-1]
    c_all = (ratios - 1.0) / W
    if np.min(c_all[:-1]) <= -1.0 + POSITIVITY_MARGIN:
        raise InfeasibleRatios(
            f"ratio {np.min(ratios[:-1]):.6g} below 1 - W = {1 - W:.6g}: derivative would vanish")

    xs = _orbit_fractions(idx, alpha)   # includes x_{i_max + 1}
    xs[idx == 0] = 0.0
    x_ret, l_ret = xs[:-1], lens[:-1]
    order = np.argsort(x_ret, kind="stable")
    x_sorted = x_ret[order]
    l_sorted = l_ret[order]
    mass_r = math.fsum(l_ret)
    prefix = _compensated_cumsum(l_sorted)
    left_mass = np.concatenate([[0.0], prefix[:-1]])
    u_sorted = (1.0 - mass_r) * x_sorted + left_mass
    index_sorted = idx[:-1][order]

    pos = np.empty(len(order), dtype=np.int64)
    pos[index_sorted + i_max] = np.arange(len(order))
    u_by_i = u_sorted[pos]
    # embedded position of x_{i_max + 1}, which has no retained gap
    x_t = xs[-1]
    j_t = np.searchsorted(x_sorted, x_t, side="left")
    y_t = (1.0 - mass_r) * x_t + (float(prefix[j_t - 1]) if j_t else 0.0)

    img_index = index_sorted + 1
    terminal = img_index > i_max
    img_u = np.where(terminal, y_t, u_by_i[np.minimum(img_index, i_max) + i_max])
    img_l = np.where(terminal, l_sorted, lens[np.minimum(img_index, i_max + 1) + i_max])
    c_sorted = np.where(terminal, 0.0, c_all[index_sorted + i_max])
    ximg = xs[img_index + i_max]

    d = DenjoyMap(alpha, gaps, i_max, cf, index_sorted, x_sorted, u_sorted, l_sorted, c_sorted,
                  img_u, img_l, ximg, float(xs[0]), float(lens[0]), mass_r, backend=backend)
    if check:
        d.invariants = _check_invariants(d)
    return d


def _check_invariants(d: DenjoyMap) -> dict:
    i_max = d.i_max
    i = np.arange(-i_max, i_max)
    k = d._pos[i + i_max]
    k1 = d._pos[i + 1 + i_max]
    gu, du = d.eval(d.u[k])
    gv, dv = d.eval(d.u[k] + d.l[k])
    err_u = circle_distance(gu, d.u[k1])
    err_v = circle_distance(gv, d.u[k1] + d.l[k1])
    # derivative on both sides of every junction
    eps_in = np.minimum(1e-3 * d.l, 1e-12)
    _, d_left_in = d.eval(d.u + eps_in)
    _, d_right_in = d.eval(d.u + d.l - eps_in)
    jump = float(np.max(np.abs(np.concatenate([du, dv, d_left_in, d_right_in]) - 1.0)))
    tail_l = float(d.l[d._pos[2 * i_max]])
    return dict(
        endpoint_error=float(max(err_u.max(), err_v.max())),
        derivative_jump=jump,
        min_derivative=float(1.0 + min(np.min(d.c), 0.0)),
        sup_ratio_deviation=float(np.max(np.abs(d.img_l / d.l - 1.0))),
        truncation_defect=tail_l,
        tail_mass=d.gaps.tail(i_max),
    )


# ----------------------------------------------------------------------
# diagnostics


@dataclass
class RotationEstimate:
    rho: float
    error: float
    iterates: int


def _check_monotone(lift: Callable, grid: int = 10_000):
    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = np.asarray([lift(x) for x in xs], dtype=float) if not _vectorized(lift) else np.asarray(lift(xs))
    steps = np.diff(vals)
    if np.any(steps <= 0.0):
        j = int(np.argmax(steps <= 0.0))
        raise NonMonotoneLift(f"lift not increasing between x={xs[j]:.6g} and x={xs[j + 1]:.6g}")
    if abs(vals[-1] - vals[0] - 1.0) > 1e-9:
        raise NonMonotoneLift("lift is not of degree one")


def _vectorized(f) -> bool:
    try:
        out = f(np.array([0.0, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def rotation_number(circle_map, iterates: int = 1_000_000, x0: float = 0.0,
                    check_grid: int = 10_000) -> RotationEstimate:
    """Rotation number by the averaged lift displacement ``(F^n(x) - x) / n``.

    ``circle_map`` is a :class:`DenjoyMap` or a lift ``F: R -> R`` with
    ``F(x + 1) = F(x) + 1``.  The error bound ``1 / n`` holds for any
    increasing degree-one lift.
    """
    if isinstance(circle_map, DenjoyMap):
        _check_monotone(circle_map.lift, check_grid)
        _, disp, _, _ = circle_map.orbit(x0, iterates)
        return RotationEstimate(disp / iterates, 1.0 / iterates, iterates)
    _check_monotone(circle_map, check_grid)
    x = float(x0)
    for _ in range(iterates):
        x = float(circle_map(x))
    return RotationEstimate((x - x0) / iterates, 1.0 / iterates, iterates)


@dataclass
class WanderingReport:
    disjoint: bool
    max_overlap: float
    overlapping_pair: tuple | None
    lengths: np.ndarray


def verify_wandering(d: DenjoyMap, N: int, table=None) -> WanderingReport:
    """Check that the closed arcs ``I_0 .. I_N`` are pairwise disjoint.

    ``table`` optionally overrides the endpoints with rows ``(i, u_i, v_i)``.
    """
    if N > d.i_max:
        raise ValueError(f"N={N} exceeds the retained window {d.i_max}")
    if table is None:
        ids = np.arange(0, N + 1)
        if d.n_gaps == 0:
            return WanderingReport(True, 0.0, None, np.zeros(0))
        k = d._pos[ids + d.i_max]
        uu, vv = d.u[k], d.u[k] + d.l[k]
    else:
        rows = [r for r in table if 0 <= r[0] <= N]
        ids = np.array([r[0] for r in rows])
        uu = np.array([r[1] for r in rows], dtype=float)
        vv = np.array([r[2] for r in rows], dtype=float)
    lengths = vv - uu
    if len(ids) <= 1:
        return WanderingReport(True, 0.0, None, lengths)
    order = np.argsort(uu, kind="stable")
    su, sv, sid = uu[order], vv[order], ids[order]
    # each arc must end before the next begins; the last wraps onto the first
    nxt_u = np.concatenate([su[1:], [su[0] + 1.0]])
    overlap = sv - nxt_u
    j = int(np.argmax(overlap))
    worst = float(overlap[j])
    if worst >= 0.0:
        pair = (int(sid[j]), int(sid[(j + 1) % len(sid)]))
        return WanderingReport(False, worst, pair, lengths)
    return WanderingReport(True, 0.0, None, lengths)


@dataclass
class LyapunovEstimate:
    value: float
    tail: float
    iterates: int


def circle_lyapunov(d: DenjoyMap, x0: float = 0.0, iterates: int = 100_000) -> LyapunovEstimate:
    """``(1/n) sum log g'(x_k)`` from ``x0`` pushed onto the minimal set.

    ``tail`` is the same average over the second half of the orbit.
    """
    y0 = float(d.project_to_minimal(x0))
    half = iterates // 2
    y_half, _, log_a, _ = d.orbit(y0, half)
    _, _, log_b, _ = d.orbit(y_half, iterates - half)
    value = (log_a + log_b) / iterates
    tail = log_b / max(iterates - half, 1)
    return LyapunovEstimate(value, tail, iterates)


@dataclass
class MinimalSetSample:
    points: np.ndarray
    resolution: float
    covered_mass: float
    total_mass: float
    tail_deficit: float
    unresolved_gaps: int


def minimal_set_sample(d: DenjoyMap, resolution: float = 1e-3) -> MinimalSetSample:
    """Grid points of the circle outside the open retained gaps, plus all
    gap endpoints."""
    grid = np.arange(0.0, 1.0, resolution)
    if d.n_gaps:
        k = d.locate(grid)
        interior = (k >= 0) & (grid > d.u[np.maximum(k, 0)]) & (grid < d.u[np.maximum(k, 0)] + d.l[np.maximum(k, 0)])
        pts = np.concatenate([grid[~interior], d.u, np.mod(d.u + d.l, 1.0)])
        pts = np.unique(pts)
    else:
        pts = grid
    return MinimalSetSample(
        points=pts,
        resolution=resolution,
        covered_mass=d.retained_mass,
        total_mass=d.gaps.mass,
        tail_deficit=d.gaps.tail(d.i_max) if d.gaps.mass else 0.0,
        unresolved_gaps=int(np.sum(d.l < resolution)),
    )


def periodic_exclusion(d: DenjoyMap, points, max_period: int = 50) -> np.ndarray:
    """``min_x |g^p(x) - x|`` over ``points`` for ``p = 1 .. max_period``."""
    y0 = np.mod(np.asarray(points, dtype=float), 1.0)
    y = y0.copy()
    out = np.empty(max_period)
    for p in range(max_period):
        y = d.eval(y)[0]
        out[p] = float(np.min(circle_distance(y, y0)))
    return out


@dataclass
class DensityReport:
    eps: float
    iterates: int
    covered: bool
    worst_distance: float
    heuristic: bool = True


def orbit_density(d: DenjoyMap, targets, eps: float = 1e-3, iterates: int = 1_000_000,
                  y0: float = 0.0) -> DensityReport:
    """Transitivity proxy: does the forward orbit of ``y0`` enter every
    ``eps``-ball about ``targets``?  A heuristic, not a proof."""
    y0 = float(d.project_to_minimal(y0))
    *_, orb = d.orbit(y0, iterates, store=True)
    orb = np.sort(orb)
    t = np.mod(np.asarray(targets, dtype=float), 1.0)
    j = np.searchsorted(orb, t)
    left = orb[(j - 1) % len(orb)]
    right = orb[j % len(orb)]
    dist = np.minimum(circle_distance(t, left), circle_distance(t, right))
    worst = float(np.max(dist)) if len(dist) else 0.0
    return DensityReport(eps, iterates, worst < eps, worst)


# ----------------------------------------------------------------------
# endpoint CSV


def write_endpoint_csv(d: DenjoyMap, path, fmt: str = ".17g"):
    i, u, v, l = d.endpoint_table()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "u_i", "v_i", "l_i"])
        for row in zip(i, u, v, l):
            w.writerow([int(row[0])] + [format(float(x), fmt) for x in row[1:]])


def read_endpoint_csv(path, alpha: float | None = None, backend: str | None = None,
                      tol: float = 1e-12) -> DenjoyMap:
    """Rebuild a :class:`DenjoyMap` from its endpoint table.

    Without ``alpha`` the rotation number is recovered from the embedded
    position of gap 1.  The rebuilt endpoints must match the file within
    ``tol``.
    """
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["i", "u_i", "v_i", "l_i"]:
            raise ConfigError(f"unexpected endpoint header {header}")
        rows = [(int(a), float(b), float(c), float(e)) for a, b, c, e in r]
    rows.sort()
    ids = np.array([r[0] for r in rows])
    i_max = int(ids[-1])
    if ids[0] != -i_max or len(ids) != 2 * i_max + 1 or np.any(np.diff(ids) != 1):
        raise ConfigError("endpoint table must list every index -I..I exactly once")
    u = np.array([r[1] for r in rows])
    lens = np.array([r[3] for r in rows])
    if alpha is None:
        # x_I = frac(I alpha) pins alpha to within an ulp / I
        mass_r = math.fsum(lens)
        x1 = (u[i_max + 1] - math.fsum(lens[u < u[i_max + 1]])) / (1.0 - mass_r)
        xI = (u[-1] - math.fsum(lens[u < u[-1]])) / (1.0 - mass_r)
        wraps = round(i_max * x1 - xI)
        alpha = (xI + wraps) / i_max
    law = GapLaw.from_lengths(lens)
    d = build_denjoy(alpha, law, i_max=i_max, strict=False, backend=backend)
    _, u_new, _, _ = d.endpoint_table()
    if float(np.max(np.abs(u_new - u))) > tol:
        raise ConfigError("endpoint table is inconsistent with a rotation orbit")
    return d
