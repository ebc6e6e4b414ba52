"""Explicit local dynamics: saddle-focus linear blocks, bump perturbations
and piecewise linear/affine cycle models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import MarkerMismatch, NotDiffeomorphism, OverlapError
from .mapcore import (
    Box,
    PeriodicPoint,
    SmoothMap3,
    invariant_subspace,
    linear_map,
)
from .profile import flat_top, flat_top_deriv

__all__ = [
    "SaddleFocusParams",
    "rotation_matrix",
    "saddle_focus_matrix",
    "make_saddle_focus",
    "make_diagonal_saddle",
    "BumpPerturbation",
    "apply_bump",
    "SaddleSpec",
    "Corridor",
    "Marker",
    "CycleSpec",
    "MarkerReport",
    "CycleModel",
    "assemble_cycle_model",
    "reference_cycle_spec",
    "heterodimensional_cycle_spec",
]


@dataclass(frozen=True)
class SaddleFocusParams:
    contracting_modulus: float
    expanding_modulus: float
    rotation: float
    focus_block: Literal["stable_xy", "unstable_xy"] = "stable_xy"

    def __post_init__(self):
        if not 0 < abs(self.contracting_modulus) < 1 < abs(self.expanding_modulus):
            raise ValueError("need 0 < |contracting| < 1 < |expanding|")
        if not 0.0 <= self.rotation < 1.0:
            raise ValueError("rotation must lie in [0, 1)")
        if self.focus_block not in ("stable_xy", "unstable_xy"):
            raise ValueError(f"unknown focus block {self.focus_block!r}")


def rotation_matrix(modulus: float, theta: float) -> np.ndarray:
    c = math.cos(2 * math.pi * theta)
    s = math.sin(2 * math.pi * theta)
    return modulus * np.array([[c, -s], [s, c]])


def saddle_focus_matrix(params: SaddleFocusParams) -> np.ndarray:
    M = np.zeros((3, 3))
    if params.focus_block == "stable_xy":
        M[:2, :2] = rotation_matrix(params.contracting_modulus, params.rotation)
        M[2, 2] = params.expanding_modulus
    else:
        M[:2, :2] = rotation_matrix(params.expanding_modulus, params.rotation)
        M[2, 2] = params.contracting_modulus
    return M


def make_saddle_focus(params: SaddleFocusParams, box: Box | None = None, center=(0.0, 0.0, 0.0)) -> SmoothMap3:
    """Linear saddle focus: rotation-scaling in the xy-plane, scaling along z."""
    m = linear_map(saddle_focus_matrix(params), center=center, domain=box,
                   label=f"saddle-focus[{params.focus_block}]")
    m.meta["params"] = params
    return m


def make_diagonal_saddle(eigenvalues: Sequence[float], box: Box | None = None, center=(0.0, 0.0, 0.0)) -> SmoothMap3:
    return linear_map(np.diag(np.asarray(eigenvalues, dtype=float)), center=center,
                      domain=box, label="diagonal-saddle")


# --------------------------------------------------------------------------
# bump perturbations

_U = np.linspace(1e-6, 1 - 1e-6, 200001)
# sup |d/ds flat_top(s, 1/2, 1)| for unit radius; scales as 1/rho
_SUP_BUMP_DERIV = float(np.max(np.abs(flat_top_deriv(0.5 + 0.5 * _U, 0.5, 1.0))))
del _U


def _axis_rotation(axis, angle) -> np.ndarray:
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


@dataclass(frozen=True)
class BumpPerturbation:
    """A rigid motion blended in by the flat-top bump on a ball.

    ``action`` is ``"translate"`` (uses ``displacement``) or ``"rotate"``
    (uses ``axis_point``, ``axis_direction`` and ``angle``).
    """

    center: tuple
    radius: float
    action: Literal["translate", "rotate"] = "translate"
    displacement: tuple = (0.0, 0.0, 0.0)
    axis_point: tuple = (0.0, 0.0, 0.0)
    axis_direction: tuple = (0.0, 0.0, 1.0)
    angle: float = 0.0

    def blend(self, y):
        s = np.linalg.norm(np.asarray(y) - np.asarray(self.center), axis=-1)
        return flat_top(s, self.radius / 2, self.radius)

    def sup_blend_deriv(self) -> float:
        return _SUP_BUMP_DERIV / self.radius

    def diffeo_margin(self) -> float:
        """``1 - (bound on |D(perturbation) - I|)``; positive means diffeomorphism."""
        return 1.0 - self.c1_size()

    def c1_size(self) -> float:
        if self.action == "translate":
            return float(np.linalg.norm(self.displacement)) * self.sup_blend_deriv()
        reach = self._axis_distance(np.asarray(self.center, dtype=float)) + self.radius
        phi = abs(self.angle)
        return phi + phi * reach * self.sup_blend_deriv()

    def c0_size(self) -> float:
        if self.action == "translate":
            return float(np.linalg.norm(self.displacement))
        return self.radius * abs(self.angle) if self._axis_distance(np.asarray(self.center)) == 0 else \
            (self._axis_distance(np.asarray(self.center)) + self.radius) * abs(self.angle)

    def _axis_distance(self, y):
        a = np.asarray(self.axis_point, dtype=float)
        e = np.asarray(self.axis_direction, dtype=float)
        e = e / np.linalg.norm(e)
        d = np.asarray(y) - a
        return float(np.linalg.norm(d - np.dot(d, e) * e))

    def motion(self, y):
        """The rigid motion applied at full strength, and its displacement field."""
        y = np.asarray(y, dtype=float)
        if self.action == "translate":
            return y + np.asarray(self.displacement, dtype=float)
        R = _axis_rotation(self.axis_direction, self.angle)
        a = np.asarray(self.axis_point, dtype=float)
        return a + (y - a) @ R.T


def apply_bump(base: SmoothMap3, pert: BumpPerturbation) -> SmoothMap3:
    """Post-compose ``base`` with ``y -> y + b(|y - c|) (motion(y) - y)``.

    The result equals ``base`` bitwise wherever ``base(x)`` lies outside the
    ball of radius ``pert.radius`` about ``pert.center``.
    """
    if pert.diffeo_margin() <= 0.0:
        raise NotDiffeomorphism(f"perturbation too large: C1 size {pert.c1_size():.3g} >= 1")
    c = np.asarray(pert.center, dtype=float)
    inner, outer = pert.radius / 2, pert.radius
    R = _axis_rotation(pert.axis_direction, pert.angle) if pert.action == "rotate" else np.eye(3)

    def phi(y):
        b = pert.blend(y)
        return y + np.asarray(b)[..., None] * (pert.motion(y) - y)

    def dphi(y):
        d = y - c
        s = np.linalg.norm(d, axis=-1)
        b = np.asarray(flat_top(s, inner, outer))
        bp = np.asarray(flat_top_deriv(s, inner, outer))
        safe = np.where(s > 0, s, 1.0)
        grad = (bp / safe)[..., None] * d
        disp = pert.motion(y) - y
        J = np.eye(3) + b[..., None, None] * (R - np.eye(3))
        return J + disp[..., :, None] * grad[..., None, :]

    def f(x):
        return phi(base.eval(x))

    def jac(x):
        return dphi(base.eval(x)) @ base.jacobian(x)

    meta = dict(base.meta)
    meta.update(c0_distance=pert.c0_size(), c1_perturbation=pert.c1_size(),
                diffeo_margin=pert.diffeo_margin(), perturbation=pert)
    return SmoothMap3(f, jac, domain=base.domain, label=f"{base.label}+bump", meta=meta)


# --------------------------------------------------------------------------
# cycle models


@dataclass(frozen=True)
class SaddleSpec:
    name: str
    matrix: tuple
    center: tuple
    half_width: float

    @classmethod
    def focus(cls, name, params: SaddleFocusParams, center, half_width):
        return cls(name, tuple(map(tuple, saddle_focus_matrix(params))), tuple(center), half_width)

    @classmethod
    def diagonal(cls, name, eigenvalues, center, half_width):
        return cls(name, tuple(map(tuple, np.diag(eigenvalues))), tuple(center), half_width)

    @property
    def box(self) -> Box:
        return Box.cube(self.half_width, self.center)


@dataclass(frozen=True)
class Corridor:
    """Affine transition ``x -> A x + b`` on an axis-aligned box."""

    name: str
    lo: tuple
    hi: tuple
    A: tuple
    b: tuple


@dataclass(frozen=True)
class Marker:
    """Declared intersection of ``W^u(unstable_of)`` with ``W^s_loc(stable_of)``
    at ``point``, reached through ``corridor``."""

    name: str
    kind: Literal["transverse", "quasi_transverse"]
    unstable_of: str
    stable_of: str
    corridor: str
    point: tuple


@dataclass(frozen=True)
class CycleSpec:
    saddles: tuple
    corridors: tuple = ()
    markers: tuple = ()
    collar_fraction: float = 0.1


@dataclass
class MarkerReport:
    name: str
    kind: str
    verified: bool
    residual: float
    rank: int
    codim: int


@dataclass
class CycleModel:
    map: SmoothMap3
    saddles: dict
    markers: list = field(default_factory=list)


@dataclass
class _Piece:
    lo: np.ndarray
    hi: np.ndarray
    collar: float
    A: np.ndarray
    b: np.ndarray

    def weight(self, x):
        below = self.lo - x
        above = x - self.hi
        s = np.maximum(np.maximum(below, above), 0.0)
        w_ax = np.asarray(flat_top(s, 0.0, self.collar))
        dw_ax = np.asarray(flat_top_deriv(s, 0.0, self.collar))
        sign = np.where(above > 0, 1.0, np.where(below > 0, -1.0, 0.0))
        w = np.prod(w_ax, axis=-1)
        grad = np.empty_like(np.asarray(x, dtype=float))
        for i in range(3):
            others = np.prod(np.delete(w_ax, i, axis=-1), axis=-1)
            grad[..., i] = others * dw_ax[..., i] * sign[..., i]
        return w, grad


def _boxes_overlap(p: _Piece, q: _Piece) -> bool:
    return bool(np.all(p.lo - p.collar < q.hi + q.collar) and np.all(q.lo - q.collar < p.hi + p.collar))


def assemble_cycle_model(spec: CycleSpec) -> CycleModel:
    """Blend linear saddle blocks and affine corridors into one smooth map and
    verify every declared intersection marker."""
    pieces = []
    saddles = {}
    for s in spec.saddles:
        L = np.array(s.matrix, dtype=float)
        c = np.array(s.center, dtype=float)
        lo, hi = c - s.half_width, c + s.half_width
        pieces.append(_Piece(lo, hi, spec.collar_fraction * 2 * s.half_width, L, c - L @ c))
    corridors = {}
    for cd in spec.corridors:
        lo, hi = np.array(cd.lo, dtype=float), np.array(cd.hi, dtype=float)
        pieces.append(_Piece(lo, hi, spec.collar_fraction * float(np.max(hi - lo)),
                             np.array(cd.A, dtype=float), np.array(cd.b, dtype=float)))
        corridors[cd.name] = cd
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            if _boxes_overlap(pieces[i], pieces[j]):
                raise OverlapError(f"pieces {i} and {j} overlap (including collars)")

    def f(x):
        x = np.asarray(x, dtype=float)
        out = x.copy()
        for p in pieces:
            w, _ = p.weight(x)
            out = out + np.asarray(w)[..., None] * (x @ p.A.T + p.b - x)
        return out

    def jac(x):
        x = np.asarray(x, dtype=float)
        J = np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)).copy()
        for p in pieces:
            w, g = p.weight(x)
            disp = x @ p.A.T + p.b - x
            J = J + np.asarray(w)[..., None, None] * (p.A - np.eye(3)) + disp[..., :, None] * g[..., None, :]
        return J

    fmap = SmoothMap3(f, jac, label="cycle-model", meta={"spec": spec})
    for s in spec.saddles:
        L = np.array(s.matrix, dtype=float)
        saddles[s.name] = PeriodicPoint.from_jacobian(np.array(s.center, dtype=float), 1, L)

    reports = [_verify_marker(spec, m, corridors, fmap) for m in spec.markers]
    return CycleModel(fmap, saddles, reports)


def _residual_from_subspace(v, basis):
    return float(np.linalg.norm(v - basis.T @ (basis @ v)))


def _verify_marker(spec: CycleSpec, m: Marker, corridors, fmap, tol=1e-10) -> MarkerReport:
    by_name = {s.name: s for s in spec.saddles}
    try:
        su, ss, cd = by_name[m.unstable_of], by_name[m.stable_of], corridors[m.corridor]
    except KeyError as exc:
        raise MarkerMismatch(f"marker {m.name} references unknown object {exc}") from exc
    Lu, Ls = np.array(su.matrix, dtype=float), np.array(ss.matrix, dtype=float)
    cu, cs = np.array(su.center, dtype=float), np.array(ss.center, dtype=float)
    Eu = invariant_subspace(Lu, lambda z: abs(z) > 1)
    Es = invariant_subspace(Ls, lambda z: abs(z) < 1)
    A, b = np.array(cd.A, dtype=float), np.array(cd.b, dtype=float)
    x = np.array(m.point, dtype=float)
    y = np.linalg.solve(A, x - b)
    pre = cu + np.linalg.solve(Lu, y - cu)
    residual = max(
        _residual_from_subspace(x - cs, Es),
        _residual_from_subspace(y - cu, Eu),
        float(np.linalg.norm(fmap.eval(y) - x)),
        float(np.linalg.norm(fmap.eval(pre) - y)),
    )
    inside = ss.box.contains(x) and su.box.contains(pre) and Box(cd.lo, cd.hi).contains(y)
    Tu = (A @ Eu.T).T
    stacked = np.vstack([Tu, Es])
    sv = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(sv > 1e-8))
    codim = 3 - rank
    if m.kind == "transverse":
        shape_ok = rank == 3
    else:
        shape_ok = rank == Tu.shape[0] + Es.shape[0] and rank < 3
    verified = bool(inside and residual < tol and shape_ok)
    if not verified:
        raise MarkerMismatch(
            f"marker {m.name} failed: residual={residual:.3g}, inside={inside}, rank={rank}, kind={m.kind}")
    return MarkerReport(m.name, m.kind, verified, residual, rank, codim)


def reference_cycle_spec(b_s=0.5, b_u=2.0, theta=(math.sqrt(5) - 1) / 2,
                         pprime_eigs=(1.5, 3.0, 0.3)) -> CycleSpec:
    """Two index-2 saddles that are homoclinically related: a focus ``P`` with
    non-real unstable multipliers at the origin and a real saddle ``P'`` at
    ``(10, 0, 0)``, joined by two translation corridors."""
    P = SaddleSpec.focus("P", SaddleFocusParams(b_s, b_u, theta % 1.0, "unstable_xy"), (0, 0, 0), 1.0)
    Pp = SaddleSpec.diagonal("P'", pprime_eigs, (10, 0, 0), 1.0)
    # W^u(P') leaves its box along y and is carried onto the z-axis of P
    y1 = np.array([10.0, 1.5, 0.0])
    x1 = np.array([0.0, 0.0, 0.5])
    c1 = Corridor("P'->P", (9.7, 1.4, -0.3), (10.3, 2.0, 0.3), tuple(map(tuple, np.eye(3))), tuple(x1 - y1))
    # W^u(P) leaves its box and is carried onto the stable axis of P'
    y2 = np.array([0.0, -1.6, 0.0])
    x2 = np.array([10.0, 0.0, 0.5])
    c2 = Corridor("P->P'", (-0.25, -1.95, -0.25), (0.25, -1.45, 0.25), tuple(map(tuple, np.eye(3))), tuple(x2 - y2))
    markers = (
        Marker("Wu(P')^Ws(P)", "transverse", "P'", "P", "P'->P", tuple(x1)),
        Marker("Wu(P)^Ws(P')", "transverse", "P", "P'", "P->P'", tuple(x2)),
    )
    return CycleSpec((P, Pp), (c1, c2), markers)


def heterodimensional_cycle_spec() -> CycleSpec:
    """``P'`` of index 2 and ``Q'`` of index 1 with a quasi-transverse
    intersection of ``W^u(Q')`` and ``W^s(P')``."""
    Pp = SaddleSpec.diagonal("P'", (1.5, 3.0, 0.3), (10, 0, 0), 1.0)
    Qp = SaddleSpec.diagonal("Q'", (0.3, 0.5, 2.5), (0, 10, 0), 1.0)
    y = np.array([0.0, 10.0, 1.5])
    x = np.array([10.0, 0.0, 0.5])
    A = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    b = x - A @ y
    cd = Corridor("Q'->P'", (-0.3, 9.7, 1.4), (0.3, 10.3, 2.0), tuple(map(tuple, A)), tuple(b))
    return CycleSpec((Pp, Qp), (cd,), (Marker("X'", "quasi_transverse", "Q'", "P'", "Q'->P'", tuple(x)),))
