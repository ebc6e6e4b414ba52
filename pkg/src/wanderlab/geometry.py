"""Sampled invariant manifolds, tangency classification, codimension of
intersections, rotation alignment and the Tatjer conditions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.optimize import brentq
from skimage.measure import find_contours

from .arith import check_irrational
from .errors import (
    AmbiguousIntersection,
    DomainEscape,
    HorizonExhausted,
    InverseDivergence,
    MeshBlowup,
    MeshTooCoarse,
    NoConvergence,
    NoIntersection,
    NoTangency,
    NoTangencyCandidate,
    SpectralGapMissing,
)
from .mapcore import Box, PeriodicPoint, SmoothMap3, invariant_subspace

__all__ = [
    "Tolerances",
    "ManifoldPatch",
    "local_manifold",
    "globalize",
    "TangencyReport",
    "tangency_order",
    "codimension_at",
    "subspace_rank",
    "AlignmentResult",
    "rotation_alignment_search",
    "IntrinsicTangency",
    "detect_intrinsic_tangency",
    "TatjerVerdict",
    "check_tatjer",
]

RANK_THRESHOLD = 1e-8
GAP_RATIO_MIN = 1.0 + 1e-6


@dataclass(frozen=True)
class Tolerances:
    first: float = 1e-7
    second: float = 1e-7
    meet: float = 1e-6
    off: float = 1e-4
    trans: float = 1e-4


DEFAULT_TOL = Tolerances()


def _orthonormal_rows(vectors) -> np.ndarray:
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    Q, R = np.linalg.qr(V.T)
    # keep the orientation of the input vectors
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return (Q * signs).T


def _canonical_basis(rows) -> np.ndarray:
    """Orthonormal basis of span(rows) built from the projected coordinate axes,
    so that axis-aligned subspaces get axis-aligned bases."""
    E = np.atleast_2d(rows)
    k = E.shape[0]
    P = E.T @ E
    norms = np.linalg.norm(P, axis=0)
    chosen = []
    for j in np.argsort(-norms, kind="stable"):
        v = P[:, j].copy()
        for c in chosen:
            v -= (v @ c) * c
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            chosen.append(v / nv)
        if len(chosen) == k:
            break
    chosen.sort(key=lambda v: int(np.argmax(np.abs(v))))
    out = []
    for v in chosen:
        j = int(np.argmax(np.abs(v)))
        out.append(v if v[j] > 0 else -v)
    return np.array(out)


# ----------------------------------------------------------------------
# patches


@dataclass
class ManifoldPatch:
    """Sampled curve ``(N, 3)`` or surface ``(Nu, Nv, 3)`` with orthonormal
    tangent frames of shape ``(N, 1, 3)`` or ``(Nu, Nv, 2, 3)``."""

    samples: np.ndarray
    params: tuple
    frames: np.ndarray
    kind: str = "generic"
    owner: PeriodicPoint | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        self.params = tuple(np.asarray(p, dtype=float) for p in self.params)
        n = self.samples.size // 3
        if n < 4:
            raise MeshTooCoarse(f"patch has {n} samples; at least 4 are needed")

    @property
    def dim(self) -> int:
        return self.samples.ndim - 1

    @property
    def points(self) -> np.ndarray:
        return self.samples.reshape(-1, 3)

    @property
    def flat_frames(self) -> np.ndarray:
        return self.frames.reshape(-1, self.dim, 3)

    @property
    def h_mesh(self) -> float:
        """Largest distance between neighbouring samples."""
        if self.dim == 1:
            return float(np.max(np.linalg.norm(np.diff(self.samples, axis=0), axis=-1)))
        du = np.linalg.norm(np.diff(self.samples, axis=0), axis=-1)
        dv = np.linalg.norm(np.diff(self.samples, axis=1), axis=-1)
        return float(max(du.max(), dv.max()))

    # construction -----------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable, u, v=None, kind: str = "generic", deriv: Callable | None = None,
                      owner=None, step: float = 1e-6) -> "ManifoldPatch":
        """Sample ``fn(u)`` or ``fn(u, v)`` (vectorized, returning ``(..., 3)``).

        Tangents come from ``deriv`` (returning one or two ``(..., 3)``
        arrays) or from central differences of ``fn``.
        """
        u = np.asarray(u, dtype=float)
        if v is None:
            pts = np.asarray(fn(u), dtype=float)
            if deriv is not None:
                t = np.asarray(deriv(u), dtype=float)
            else:
                t = (np.asarray(fn(u + step)) - np.asarray(fn(u - step))) / (2 * step)
            t = t / np.linalg.norm(t, axis=-1, keepdims=True)
            return cls(pts, (u,), t[:, None, :], kind, owner)
        v = np.asarray(v, dtype=float)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.asarray(fn(U, V), dtype=float)
        if deriv is not None:
            tu, tv = (np.asarray(a, dtype=float) for a in deriv(U, V))
        else:
            tu = (np.asarray(fn(U + step, V)) - np.asarray(fn(U - step, V))) / (2 * step)
            tv = (np.asarray(fn(U, V + step)) - np.asarray(fn(U, V - step))) / (2 * step)
        return cls(pts, (u, v), _frames_from_tangents(tu, tv), kind, owner)

    @classmethod
    def from_samples(cls, samples, params=None, kind: str = "generic", owner=None) -> "ManifoldPatch":
        """Build frames from spline derivatives of the samples themselves."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 2:
            u = np.arange(len(samples), dtype=float) if params is None else np.asarray(params[0])
            if len(u) < 4:
                raise MeshTooCoarse("curve needs at least 4 samples")
            t = CubicSpline(u, samples, axis=0)(u, 1)
            t = t / np.linalg.norm(t, axis=-1, keepdims=True)
            return cls(samples, (u,), t[:, None, :], kind, owner)
        nu, nv = samples.shape[:2]
        if params is None:
            params = (np.arange(nu, dtype=float), np.arange(nv, dtype=float))
        u, v = (np.asarray(p, dtype=float) for p in params)
        tu = CubicSpline(u, samples, axis=0)(u, 1)
        tv = CubicSpline(v, samples, axis=1)(v, 1)
        return cls(samples, (u, v), _frames_from_tangents(tu, tv), kind, owner)

    # queries -----------------------------------------------------------
    def nearest(self, x):
        """Flat index of the nearest sample and its distance."""
        d = np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=-1)
        j = int(np.argmin(d))
        return j, float(d[j])

    def distance(self, x) -> float:
        """Distance from ``x`` to the patch, using the tangent space at the
        nearest sample (exact for flat pieces, second order otherwise)."""
        x = np.asarray(x, dtype=float)
        j, d0 = self.nearest(x)
        p = self.points[j]
        F = self.flat_frames[j]
        r = x - p
        along = F @ r
        # do not extrapolate beyond one mesh cell
        limit = self.h_mesh
        if np.any(np.abs(along) > limit):
            return d0 if self.dim == 2 else float(self._polyline_distance(x))
        return float(np.linalg.norm(r - F.T @ along))

    def _polyline_distance(self, x):
        a = self.samples[:-1]
        b = self.samples[1:]
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0, 1)
        return np.min(np.linalg.norm(a + t[:, None] * ab - x, axis=-1))

    def tangent_space(self, x) -> np.ndarray:
        j, _ = self.nearest(x)
        return self.flat_frames[j]

    def interpolator(self):
        """Spline ``param -> point`` of the samples."""
        if self.dim == 1:
            return CubicSpline(self.params[0], self.samples, axis=0)
        u, v = self.params
        splines = [RectBivariateSpline(u, v, self.samples[..., c], kx=min(3, len(u) - 1),
                                       ky=min(3, len(v) - 1)) for c in range(3)]

        def ev(uu, vv, du=0, dv=0):
            return np.stack([s(uu, vv, dx=du, dy=dv, grid=False) for s in splines], axis=-1)

        return ev

    # io ----------------------------------------------------------------
    def to_csv(self, path, fmt: str = ".17g"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.dim == 1:
                w.writerow(["u", "x", "y", "z", "t1x", "t1y", "t1z"])
                for u, p, f in zip(self.params[0], self.samples, self.frames):
                    w.writerow([format(v, fmt) for v in (u, *p, *f[0])])
            else:
                w.writerow(["u", "v", "x", "y", "z", "t1x", "t1y", "t1z", "t2x", "t2y", "t2z"])
                for i, u in enumerate(self.params[0]):
                    for j, v in enumerate(self.params[1]):
                        f = self.frames[i, j]
                        w.writerow([format(val, fmt) for val in (u, v, *self.samples[i, j], *f[0], *f[1])])

    @classmethod
    def from_csv(cls, path, kind: str = "generic") -> "ManifoldPatch":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float)
        if header[1] == "x":
            return cls(data[:, 1:4], (data[:, 0],), data[:, None, 4:7], kind)
        u = np.unique(data[:, 0])
        v = np.unique(data[:, 1])
        shape = (len(u), len(v))
        return cls(data[:, 2:5].reshape(shape + (3,)), (u, v),
                   np.stack([data[:, 5:8], data[:, 8:11]], axis=1).reshape(shape + (2, 3)), kind)


def _frames_from_tangents(tu, tv):
    e1 = tu / np.linalg.norm(tu, axis=-1, keepdims=True)
    w = tv - np.sum(tv * e1, axis=-1, keepdims=True) * e1
    e2 = w / np.linalg.norm(w, axis=-1, keepdims=True)
    return np.stack([e1, e2], axis=-2)


# ----------------------------------------------------------------------
# local manifolds


def _inverse_batch(fmap: SmoothMap3, Y, guess, tol: float = 1e-13, max_iter: int = 60):
    X = np.array(guess, dtype=float)
    scale = 1.0 + np.linalg.norm(Y, axis=-1)
    for _ in range(max_iter):
        R = fmap.eval(X) - Y
        err = np.linalg.norm(R, axis=-1)
        if np.all(err <= tol * scale):
            return X
        J = fmap.jacobian(X)
        X = X - np.linalg.solve(J, R[..., None])[..., 0]
        if not np.all(np.isfinite(X)):
            break
    raise InverseDivergence("batched Newton inversion failed")


def _splitting(J, which: str):
    w = np.linalg.eigvals(J)
    mods = np.abs(w)
    if np.any(np.abs(mods - 1.0) < 1e-9):
        raise SpectralGapMissing("multiplier on the unit circle")
    if which in ("stable", "unstable"):
        sel = (lambda z: abs(z) > 1) if which == "unstable" else (lambda z: abs(z) < 1)
        return sel, which == "unstable"
    expanding = which == "strong_unstable"
    block = sorted([z for z in w if (abs(z) > 1) == expanding], key=abs, reverse=expanding)
    if len(block) < 2:
        raise SpectralGapMissing(f"{which}: the {'un' if expanding else ''}stable block is one-dimensional")
    lead, nxt = block[0], block[1]
    if abs(lead.imag) > 1e-14 * abs(lead):
        raise SpectralGapMissing(f"{which}: dominant multipliers form a complex pair")
    ratio = abs(lead) / abs(nxt) if expanding else abs(nxt) / abs(lead)
    if ratio <= GAP_RATIO_MIN:
        raise SpectralGapMissing(f"{which}: gap ratio {ratio:.9g} too small")
    return (lambda z: abs(z - lead) < 1e-12 * max(1.0, abs(lead))), expanding


def local_manifold(fmap: SmoothMap3, p: PeriodicPoint, which: str, size: float, n: int = 41,
                   defect_tol: float = 1e-8, max_iter: int = 200) -> ManifoldPatch:
    """Local (strong) stable or unstable manifold of ``p`` as a graph over its
    eigenspace, refined by the graph transform.

    Unstable-type manifolds are invariant graphs of the period map, stable
    ones of its inverse.  The returned patch has ``n`` samples per
    parameter on ``[-size, size]``.
    """
    if p.period_jacobian is None:
        raise ValueError("periodic point carries no period Jacobian")
    c = np.asarray(p.location, dtype=float)
    J = np.asarray(p.period_jacobian, dtype=float)
    select, forward = _splitting(J, which)
    E = _canonical_basis(invariant_subspace(J, select))
    F = _canonical_basis(invariant_subspace(J, lambda z: not select(z)))
    k, m = E.shape[0], F.shape[0]
    B = np.vstack([E, F]).T       # columns: eigen-coordinates -> space
    Binv = np.linalg.inv(B)
    period = p.period

    def G(X):
        for _ in range(period):
            X = fmap.eval(X)
        return X

    def Ginv(Y, guess):
        for _ in range(period):
            Y = _inverse_batch(fmap, Y, guess)
            guess = Y
        return Y

    step = G if forward else (lambda X: Ginv(X, c + (X - c) @ np.linalg.inv(J).T))
    Lk = (Binv @ (J if forward else np.linalg.inv(J)) @ B)[:k, :k]

    s = np.linspace(-size, size, n)
    if k == 1:
        xi = s[:, None]
        shape = (n,)
    else:
        U, V = np.meshgrid(s, s, indexing="ij")
        xi = np.stack([U, V], axis=-1).reshape(-1, 2)
        shape = (n, n)
    h = np.zeros((xi.shape[0], m))

    def interp(hvals):
        if k == 1:
            return CubicSpline(s, hvals, axis=0)
        splines = [RectBivariateSpline(s, s, hvals[:, j].reshape(n, n)) for j in range(m)]
        return splines

    def h_at(spl, pts):
        if k == 1:
            return spl(pts[:, 0])
        return np.stack([sp(pts[:, 0], pts[:, 1], grid=False) for sp in spl], axis=-1)

    def embed(x_, h_):
        return c + x_ @ E + h_ @ F

    defect = np.inf
    for it in range(max_iter):
        spl = interp(h)
        # preimage along the graph of each grid node's eigen-coordinate
        xi0 = xi @ np.linalg.inv(Lk).T
        for _ in range(30):
            X0 = embed(xi0, h_at(spl, xi0))
            Y = step(X0)
            coords = (Y - c) @ Binv.T
            r = coords[:, :k] - xi
            if np.max(np.abs(r)) < 1e-15 * max(1.0, size):
                break
            xi0 = xi0 - r @ np.linalg.inv(Lk).T
        h_new = coords[:, k:]
        change = float(np.max(np.abs(h_new - h)))
        h = h_new
        spl = interp(h)
        # invariance defect on the part of the grid whose image stays inside
        Y = step(embed(xi, h))
        coords = (Y - c) @ Binv.T
        inside = np.all(np.abs(coords[:, :k]) <= size, axis=1)
        defect = float(np.max(np.abs(coords[inside, k:] - h_at(spl, coords[inside, :k])))) if inside.any() else 0.0
        if defect < defect_tol and change < defect_tol:
            break
    else:
        raise NoConvergence(f"graph transform did not converge (defect {defect:.3g})")

    spl = interp(h)
    pts = embed(xi, h).reshape(shape + (3,))
    kind = {"stable": "stable", "unstable": "unstable",
            "strong_stable": "strong_stable_leaf", "strong_unstable": "strong_unstable_leaf"}[which]
    if k == 1:
        dh = spl(s, 1)
        t = E[0][None, :] + dh @ F
        t = t / np.linalg.norm(t, axis=-1, keepdims=True)
        patch = ManifoldPatch(pts, (s,), t[:, None, :], kind, p)
    else:
        du = np.stack([sp(xi[:, 0], xi[:, 1], dx=1, grid=False) for sp in spl], axis=-1)
        dv = np.stack([sp(xi[:, 0], xi[:, 1], dy=1, grid=False) for sp in spl], axis=-1)
        tu = (E[0][None, :] + du @ F).reshape(shape + (3,))
        tv = (E[1][None, :] + dv @ F).reshape(shape + (3,))
        patch = ManifoldPatch(pts, (s, s), _frames_from_tangents(tu, tv), kind, p)
    patch.meta.update(defect=defect, iterations=it + 1, eigenbasis=E, complement=F)
    return patch


# ----------------------------------------------------------------------
# globalization


def _push(fmap: SmoothMap3, X, T, n: int):
    """Image of points ``X`` and tangent vectors ``T`` (..., k, 3) under ``fmap^n``."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    for step in range(abs(n)):
        if n > 0:
            J = fmap.jacobian(X)
            T = np.einsum("nij,nkj->nki", J, T)
            X = fmap.eval(X)
        else:
            guess = X
            mat = fmap.meta.get("matrix")
            if mat is not None:
                cen = fmap.meta["center"]
                guess = cen + (X - cen) @ np.linalg.inv(mat).T
            X = _inverse_batch(fmap, X, guess)
            J = fmap.jacobian(X)
            T = np.linalg.solve(J[:, None, :, :], T[..., None])[..., 0]
        if not np.all(np.isfinite(X)):
            raise DomainEscape(step + 1)
        if fmap.domain is not None:
            bad = ~np.asarray(fmap.domain.contains(X), dtype=bool)
            if np.any(bad):
                raise DomainEscape(step + 1, X[int(np.argmax(bad))])
    return X, T


def _interior_mask(ref: ManifoldPatch):
    shape = tuple(len(p) for p in ref.params)
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(1, -1) for _ in shape)] = True
    return mask.ravel()


def _c1_distance(patch: ManifoldPatch, ref: ManifoldPatch) -> float:
    """C1 distance over the part of ``patch`` lying over the interior of ``ref``."""
    worst = 0.0
    inside = _interior_mask(ref)
    for x, f in zip(patch.points, patch.flat_frames):
        j, _ = ref.nearest(x)
        if not inside[j]:
            continue
        d0 = ref.distance(x)
        Fr = ref.tangent_space(x)
        # largest principal angle between tangent spaces of equal dimension
        sv = np.linalg.svd(f @ Fr.T, compute_uv=False)
        ang = float(np.arccos(np.clip(np.min(sv), -1.0, 1.0)))
        worst = max(worst, d0, ang)
    return worst


def globalize(fmap: SmoothMap3, patch: ManifoldPatch, n: int, h_mesh: float | None = None,
              budget: int = 200_000, reference: ManifoldPatch | None = None) -> ManifoldPatch:
    """Image of ``patch`` under ``fmap^n`` (backward for ``n < 0``) with
    adaptive resampling so that neighbouring samples stay within ``h_mesh``."""
    if n == 0:
        out = replace(patch, meta=dict(patch.meta))
        if reference is not None:
            out.meta["c1_distance"] = _c1_distance(out, reference)
        return out
    if h_mesh is None:
        h_mesh = max(patch.h_mesh, 1e-12)
    src = patch.interpolator()
    if patch.dim == 1:
        u = patch.params[0].copy()
        pts = patch.samples
        while True:
            tan = src(u, 1)
            X, T = _push(fmap, pts, tan[:, None, :], n)
            gaps = np.linalg.norm(np.diff(X, axis=0), axis=-1)
            if np.all(gaps <= h_mesh):
                break
            if len(u) * 2 > budget:
                raise MeshBlowup(f"resampling needs more than {budget} samples")
            bad = np.nonzero(gaps > h_mesh)[0]
            u = np.sort(np.concatenate([u, 0.5 * (u[bad] + u[bad + 1])]))
            pts = src(u)
        T = T[:, 0, :]
        T = T / np.linalg.norm(T, axis=-1, keepdims=True)
        out = ManifoldPatch(X, (u,), T[:, None, :], patch.kind, patch.owner)
    else:
        u, v = patch.params
        pts = patch.samples
        while True:
            U, V = np.meshgrid(u, v, indexing="ij")
            tu = src(U.ravel(), V.ravel(), du=1)
            tv = src(U.ravel(), V.ravel(), dv=1)
            X, T = _push(fmap, pts.reshape(-1, 3), np.stack([tu, tv], axis=1), n)
            Xg = X.reshape(len(u), len(v), 3)
            h = max(np.linalg.norm(np.diff(Xg, axis=0), axis=-1).max(),
                    np.linalg.norm(np.diff(Xg, axis=1), axis=-1).max())
            if h <= h_mesh:
                break
            if (2 * len(u) - 1) * (2 * len(v) - 1) > budget:
                raise MeshBlowup(f"resampling needs more than {budget} samples")
            u = np.sort(np.concatenate([u, 0.5 * (u[:-1] + u[1:])]))
            v = np.sort(np.concatenate([v, 0.5 * (v[:-1] + v[1:])]))
            U, V = np.meshgrid(u, v, indexing="ij")
            pts = src(U, V)
        frames = _frames_from_tangents(T[:, 0, :], T[:, 1, :]).reshape(len(u), len(v), 2, 3)
        out = ManifoldPatch(Xg, (u, v), frames, patch.kind, patch.owner)
    out.meta["iterate"] = n
    if reference is not None:
        out.meta["c1_distance"] = _c1_distance(out, reference)
    return out


# ----------------------------------------------------------------------
# tangency


@dataclass
class TangencyReport:
    location: np.ndarray
    order: str
    codim: int
    second_derivative: float
    adapted_frame: np.ndarray
    first_derivative: float = 0.0
    curve_tangent: np.ndarray | None = None
    curve_param: float = 0.0


class _SurfaceFit:
    """Quadratic height function of a surface around a grid node:
    ``G(X) = n.(X - p) - Q(e1.(X - p), e2.(X - p))``."""

    def __init__(self, surface: ManifoldPatch, near):
        if surface.dim != 2:
            raise ValueError("surface patch must be two-dimensional")
        nu, nv = surface.samples.shape[:2]
        if nu < 5 or nv < 5:
            raise MeshTooCoarse("surface needs a 5x5 stencil")
        j, _ = surface.nearest(near)
        i0, j0 = divmod(j, nv)
        i0 = min(max(i0, 2), nu - 3)
        j0 = min(max(j0, 2), nv - 3)
        P = surface.samples[i0 - 2:i0 + 3, j0 - 2:j0 + 3].reshape(-1, 3)
        p = surface.samples[i0, j0]
        f = surface.frames[i0, j0]
        e1 = f[0]
        nrm = np.cross(f[0], f[1])
        nrm /= np.linalg.norm(nrm)
        e2 = np.cross(nrm, e1)
        d = P - p
        a1, a2, h = d @ e1, d @ e2, d @ nrm
        A = np.stack([np.ones_like(a1), a1, a2, a1 * a1, a1 * a2, a2 * a2], axis=1)
        scale = max(np.max(np.abs(a1)), np.max(np.abs(a2)), 1e-300)
        S = np.array([1, scale, scale, scale ** 2, scale ** 2, scale ** 2])
        coef, *_ = np.linalg.lstsq(A / S, h, rcond=None)
        self.q = coef / S
        self.p, self.e1, self.e2, self.n = p, e1, e2, nrm

    def value(self, X):
        d = np.asarray(X) - self.p
        x, y = d @ self.e1, d @ self.e2
        a, b, c, dd, e, f = self.q
        return d @ self.n - (a + b * x + c * y + dd * x * x + e * x * y + f * y * y)

    def grad(self, X):
        d = np.asarray(X) - self.p
        x, y = d @ self.e1, d @ self.e2
        _, b, c, dd, e, f = self.q
        gx = b + 2 * dd * x + e * y
        gy = c + e * x + 2 * f * y
        return self.n[None, :] - np.multiply.outer(gx, self.e1) - np.multiply.outer(gy, self.e2) \
            if np.ndim(x) else self.n - gx * self.e1 - gy * self.e2

    def hessian(self):
        _, _, _, dd, e, f = self.q
        E1, E2 = np.outer(self.e1, self.e1), np.outer(self.e2, self.e2)
        M = np.outer(self.e1, self.e2)
        return -(2 * dd * E1 + e * (M + M.T) + 2 * f * E2)


class _CurveFit:
    """Local polynomial fit of a sampled curve in its own parameter."""

    def __init__(self, curve: ManifoldPatch, near, half_window: int = 7, degree: int = 6):
        if curve.dim != 1:
            raise ValueError("curve patch must be one-dimensional")
        N = len(curve.samples)
        j, _ = curve.nearest(near)
        lo, hi = max(j - half_window, 0), min(j + half_window + 1, N)
        P = curve.samples[lo:hi]
        if len(P) < 4:
            raise MeshTooCoarse("curve window has fewer than 4 samples")
        t = curve.params[0][lo:hi] - curve.params[0][j]
        self.scale = max(t[-1] - t[0], 1e-300)
        deg = min(degree, len(P) - 1)
        polys = [np.polynomial.Polynomial.fit(t, P[:, c], deg) for c in range(3)]
        self.polys = [polys, [q.deriv(1) for q in polys], [q.deriv(2) for q in polys]]
        self.t_range = (float(t[0]), float(t[-1]))
        self.offset = lo

    def __call__(self, t, der=0):
        return np.stack([q(t) for q in self.polys[der]], axis=-1)


def _roots_in(f, grid, vals):
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    out = [float(brentq(f, grid[i], grid[i + 1], xtol=1e-15)) for i in idx]
    out += [float(grid[i]) for i in np.nonzero(vals == 0.0)[0]]
    return sorted(out)


def tangency_order(curve: ManifoldPatch, surface: ManifoldPatch, near, tol: Tolerances = DEFAULT_TOL
                   ) -> TangencyReport:
    """Classify the contact of ``curve`` with ``surface`` near ``near`` as
    transverse, quadratic (``z' = 0, z'' != 0``) or degenerate."""
    near = np.asarray(near, dtype=float)
    surf = _SurfaceFit(surface, near)
    cf = _CurveFit(curve, near)
    H = surf.hessian()

    def height(t):
        X = cf(t)
        return surf.value(X) / np.linalg.norm(surf.grad(X), axis=-1)

    def derivs(t):
        # vectorized over t: (z', z'', unit tangent, unit normal)
        c1, c2 = cf(t, 1), cf(t, 2)
        g = surf.grad(cf(t))
        gn = np.linalg.norm(g, axis=-1)
        sp = np.linalg.norm(c1, axis=-1)
        T = c1 / sp[..., None]
        c2T = np.sum(c2 * T, axis=-1)
        kappa = (c2 - c2T[..., None] * T) / (sp ** 2)[..., None]
        z1 = np.sum(g * T, axis=-1) / gn
        z2 = (np.einsum("...i,ij,...j->...", T, H, T) + np.sum(g * kappa, axis=-1)) / gn
        return z1, z2, T, g / gn[..., None]

    grid = np.linspace(cf.t_range[0], cf.t_range[1], 4001)
    hv = height(grid)
    cand = _roots_in(height, grid, hv)
    j = int(np.argmin(np.abs(hv)))
    if not cand:
        cand = [float(grid[j])]
    meets = [t for t in cand if abs(height(t)) < tol.meet]
    if not meets:
        # tangential contact without a sign change: refine the critical point
        dh = np.gradient(hv, grid)
        crit = _roots_in(lambda t: float(np.interp(t, grid, dh)), grid, dh)
        crit = [t for t in crit if abs(height(t)) < tol.meet]
        if not crit:
            raise NoIntersection(f"curve misses surface near {near} (min height {abs(hv[j]):.3g})")
        meets = crit
    spacing = (grid[1] - grid[0]) * 50
    clusters = [meets[0]]
    for t in meets[1:]:
        if t - clusters[-1] > spacing:
            clusters.append(t)
    if len(clusters) > 1:
        raise AmbiguousIntersection(f"{len(clusters)} intersection candidates near {near}")
    t0 = clusters[0]
    z1, z2, T, nrm = derivs(t0)
    # a critical point of the height inside the meeting band is the contact
    # point; a cubic or flatter contact also has a vanishing z'' nearby
    w = 10.0 * (grid[1] - grid[0])
    tt = np.linspace(max(t0 - w, grid[0]), min(t0 + w, grid[-1]), 201)
    d1 = derivs(tt)[0]
    crit = [t for t in _roots_in(lambda t: derivs(t)[0], tt, d1) if abs(height(t)) < tol.meet]
    if crit:
        t0 = min(crit, key=lambda t: abs(t - t0))
        z1, z2, T, nrm = derivs(t0)
    if abs(z1) < tol.first:
        d2 = derivs(tt)[1]
        flat = [t for t in _roots_in(lambda t: derivs(t)[1], tt, d2) if abs(derivs(t)[0]) < tol.first]
        if flat:
            t0 = min(flat, key=lambda t: abs(t - t0))
        z1, z2, T, nrm = derivs(t0)
    if abs(z1) >= tol.first:
        order = "transverse"
    elif abs(z2) > tol.second:
        order = "quadratic"
    else:
        order = "degenerate"
    loc = cf(t0)
    e1 = T - (T @ nrm) * nrm
    if np.linalg.norm(e1) < 1e-12:
        e1 = surf.e1
    e1 = e1 / np.linalg.norm(e1)
    frame = np.array([e1, np.cross(nrm, e1), nrm])
    surf_frame = np.array([surf.e1, surf.e2])
    codim = 3 - subspace_rank(np.vstack([T[None, :], surf_frame]))
    return TangencyReport(loc, order, codim, float(z2), frame, float(z1), T, float(t0))


def subspace_rank(rows, threshold: float = RANK_THRESHOLD) -> int:
    sv = np.linalg.svd(np.atleast_2d(rows), compute_uv=False)
    return int(np.sum(sv > threshold))


def codimension_at(A: ManifoldPatch, B: ManifoldPatch, x, tol_meet: float = DEFAULT_TOL.meet) -> int:
    """``3 - (dim TA + dim TB - dim(TA & TB))`` at the common point ``x``."""
    x = np.asarray(x, dtype=float)
    for P in (A, B):
        if P.distance(x) >= tol_meet:
            raise NoIntersection(f"point {x} is not on the {P.kind} patch")
    FA = _orthonormal_rows(A.tangent_space(x))
    FB = _orthonormal_rows(B.tangent_space(x))
    rank = subspace_rank(np.vstack([FA, FB]))
    inter = FA.shape[0] + FB.shape[0] - rank
    return 3 - (FA.shape[0] + FB.shape[0] - inter)


# ----------------------------------------------------------------------
# rotation alignment


@dataclass
class AlignmentResult:
    n: int
    angle: float
    location: np.ndarray
    direction: np.ndarray


def _vector_angle(a, b) -> float:
    return float(math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b)))


def rotation_alignment_search(fmap: SmoothMap3, patch: ManifoldPatch, marker, target, eps: float,
                              horizon: int = 10_000, theta: float | None = None, min_n: int = 1
                              ) -> AlignmentResult:
    """Smallest ``n`` in ``[min_n, horizon]`` with angle(v_n, target) < eps,
    where ``v_n`` is the unit tangent of ``patch`` at ``marker`` pushed
    forward ``n`` times."""
    if theta is None:
        params = fmap.meta.get("params")
        theta = getattr(params, "rotation", None)
    if theta is None:
        raise ValueError("rotation number of the focus block is required")
    check_irrational(theta % 1.0)
    x = np.asarray(marker, dtype=float)
    v = np.asarray(patch.tangent_space(x)[0], dtype=float)
    target = np.asarray(target, dtype=float)
    target = target / np.linalg.norm(target)
    best = (None, np.inf)
    for n in range(0, horizon + 1):
        if n >= min_n:
            ang = _vector_angle(v, target)
            if ang < best[1]:
                best = (n, ang)
            if ang < eps:
                return AlignmentResult(n, ang, x.copy(), v.copy())
        if n == horizon:
            break
        v = fmap.jacobian(x) @ v
        v = v / np.linalg.norm(v)
        x = fmap.eval(x)
        if fmap.domain is not None and not fmap.in_domain(x):
            raise DomainEscape(n + 1, x)
    raise HorizonExhausted(best[0] if best[0] is not None else -1, float(best[1]))


# ----------------------------------------------------------------------
# intrinsic tangency


@dataclass
class IntrinsicTangency:
    report: TangencyReport
    leaf_index: int
    leaf: ManifoldPatch
    trace: ManifoldPatch


def _fit_plane(points):
    P = np.asarray(points, dtype=float)
    c = P.mean(axis=0)
    _, sv, Vt = np.linalg.svd(P - c, full_matrices=False)
    return c, Vt[2], float(sv[2] / max(np.sqrt(len(P)), 1.0))


def _extrude(leaf: ManifoldPatch, normal, width: float, n: int = 7) -> ManifoldPatch:
    w = np.linspace(-width, width, n)
    pts = leaf.samples[:, None, :] + w[None, :, None] * normal[None, None, :]
    t = np.broadcast_to(leaf.frames[:, None, 0, :], pts.shape)
    nn = np.broadcast_to(normal, pts.shape)
    return ManifoldPatch(pts, (leaf.params[0], w), _frames_from_tangents(t, nn), "generic")


def _trace_curves(Wu: ManifoldPatch, c, nrm, region: Box | None, residual_tol: float):
    u, v = Wu.params
    phi = (Wu.samples - c) @ nrm
    ev = Wu.interpolator()
    traces = []
    for contour in find_contours(phi, 0.0):
        iu = np.interp(contour[:, 0], np.arange(len(u)), u)
        iv = np.interp(contour[:, 1], np.arange(len(v)), v)
        # Newton refinement of the plane crossing along the parameter gradient
        for _ in range(20):
            X = ev(iu, iv)
            f = (X - c) @ nrm
            gu = ev(iu, iv, du=1) @ nrm
            gv = ev(iu, iv, dv=1) @ nrm
            g2 = gu * gu + gv * gv
            iu = iu - f * gu / g2
            iv = iv - f * gv / g2
            if np.max(np.abs(f)) < 1e-14:
                break
        X = ev(iu, iv)
        res = np.max(np.abs((X - c) @ nrm))
        if res > residual_tol:
            raise MeshTooCoarse(f"trace extraction residual {res:.3g}")
        if region is not None:
            X = X[np.asarray(region.contains(X), dtype=bool)]
        if len(X) < 8:
            continue
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(X, axis=0), axis=-1))])
        keep = np.concatenate([[True], np.diff(s) > 1e-14])
        traces.append(ManifoldPatch.from_samples(X[keep], (s[keep],), kind="generic"))
    return traces


def _in_plane_cross(t, d, nrm):
    return float(np.cross(t, d) @ nrm)


def detect_intrinsic_tangency(Wu: ManifoldPatch, foliation_leaves, region: Box | None = None,
                              tol: Tolerances = DEFAULT_TOL, plane=None,
                              trace_residual: float = 1e-10) -> IntrinsicTangency:
    """First quadratic tangency between the trace ``Wu & S`` and a leaf lying
    in the common plane ``S``.

    ``foliation_leaves`` is a list of curve patches (scanned in list order)
    or a callable ``point -> leaf patch`` for a continuous foliation, in
    which case ``plane=(point, normal)`` must be given.
    """
    if callable(foliation_leaves):
        if plane is None:
            raise ValueError("a continuous foliation needs the common plane")
        c, nrm = (np.asarray(a, dtype=float) for a in plane)
        nrm = nrm / np.linalg.norm(nrm)
        leaves = None
    else:
        leaves = list(foliation_leaves)
        if not leaves:
            raise NoTangency("empty leaf list")
        c, nrm, spread = _fit_plane(np.vstack([lf.points for lf in leaves]))
        if spread > 1e-8:
            raise ValueError("leaves do not lie in a common plane")
    traces = _trace_curves(Wu, c, nrm, region, trace_residual)
    if not traces:
        raise NoTangency("unstable manifold does not cross the leaf plane inside the region")
    width = 10.0 * max(Wu.h_mesh, 1e-6)

    if leaves is None:
        for trace in traces:
            T = trace.flat_frames[:, 0, :]
            dirs = []
            for x in trace.points:
                leaf = foliation_leaves(x)
                dirs.append(leaf.tangent_space(x)[0])
            cross = np.array([_in_plane_cross(t, d, nrm) for t, d in zip(T, dirs)])
            s = trace.params[0]
            sgn = np.sign(cross)
            idx = np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]
            spline = trace.interpolator()
            for i in idx:
                def g(sv):
                    x = spline(sv)
                    t = spline(sv, 1)
                    d = foliation_leaves(x).tangent_space(x)[0]
                    return _in_plane_cross(t / np.linalg.norm(t), d, nrm)
                s0 = brentq(g, s[i], s[i + 1], xtol=1e-15) if g(s[i]) * g(s[i + 1]) < 0 else s[i]
                x0 = spline(s0)
                leaf = foliation_leaves(x0)
                rep = tangency_order(trace, _extrude(leaf, nrm, width), x0, tol)
                if rep.order == "quadratic":
                    return IntrinsicTangency(rep, 0, leaf, trace)
        raise NoTangency("no leaf of the foliation is tangent to the trace")

    for li, leaf in enumerate(leaves):
        surf = _extrude(leaf, nrm, width)
        for trace in traces:
            d = np.array([leaf.distance(x) for x in trace.points])
            thr = 2.0 * max(trace.h_mesh, leaf.h_mesh)
            # local minima of the distance, in arclength order
            cand = [i for i in range(len(d)) if d[i] < thr
                    and (i == 0 or d[i] <= d[i - 1]) and (i == len(d) - 1 or d[i] <= d[i + 1])]
            for i in cand:
                try:
                    rep = tangency_order(trace, surf, trace.points[i], tol)
                except (NoIntersection, AmbiguousIntersection):
                    continue
                if rep.order == "quadratic":
                    return IntrinsicTangency(rep, li, leaf, trace)
    raise NoTangency("no quadratic tangency between the trace and any leaf")


# ----------------------------------------------------------------------
# Tatjer conditions


@dataclass
class TatjerVerdict:
    c1: bool
    c2: bool
    c3: bool
    witness: TangencyReport
    plane_S: ManifoldPatch
    off_distance: float = 0.0
    leaf_angle: float = 0.0
    transversality: float = 0.0

    @property
    def holds(self) -> bool:
        return self.c1 and self.c2 and self.c3


def _line_angle(a, b) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(math.atan2(np.linalg.norm(np.cross(a, b)), abs(float(a @ b))))


def check_tatjer(Ws_return: ManifoldPatch, Wu_loc: ManifoldPatch, leaf: ManifoldPatch, Wuu: ManifoldPatch,
                 forward_map: SmoothMap3, n0: int, tol: Tolerances = DEFAULT_TOL,
                 S_directions=((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)), plane_size: float = 0.05) -> TatjerVerdict:
    """Evaluate the three Tatjer conditions at the tangency of ``Ws_return``
    with ``Wu_loc``."""
    d = np.array([Wu_loc.distance(x) for x in Ws_return.points])
    j = int(np.argmin(d))
    if d[j] > 2.0 * max(Ws_return.h_mesh, Wu_loc.h_mesh):
        raise NoTangencyCandidate("returning stable manifold does not approach the local unstable manifold")
    try:
        rep = tangency_order(Ws_return, Wu_loc, Ws_return.points[j], tol)
    except NoIntersection as exc:
        raise NoTangencyCandidate(str(exc)) from exc
    x0 = rep.location
    off = Wuu.distance(x0)
    c1 = rep.order == "quadratic" and off > tol.off
    leaf_meets = leaf.distance(x0) < tol.meet
    ang = _line_angle(rep.curve_tangent, leaf.tangent_space(x0)[0])
    c2 = bool(leaf_meets and ang < tol.first)

    orbit_x = x0.copy()
    T = _orthonormal_rows(Wu_loc.tangent_space(x0))
    for _ in range(n0):
        T = (forward_map.jacobian(orbit_x) @ T.T).T
        orbit_x = forward_map.eval(orbit_x)
    S = _orthonormal_rows(np.asarray(S_directions, dtype=float))
    g = np.linspace(-plane_size, plane_size, 5)
    plane = ManifoldPatch.from_function(lambda a, b: orbit_x + a[..., None] * S[0] + b[..., None] * S[1],
                                        g, g, kind="central_stable_plane",
                                        deriv=lambda a, b: (np.broadcast_to(S[0], a.shape + (3,)),
                                                            np.broadcast_to(S[1], a.shape + (3,))))
    sv = np.linalg.svd(np.vstack([S, _orthonormal_rows(T)]), compute_uv=False)
    margin = float(sv[2]) if len(sv) > 2 else 0.0
    c3 = margin > tol.trans
    return TatjerVerdict(bool(c1), c2, bool(c3), rep, plane, float(off), ang, margin)
