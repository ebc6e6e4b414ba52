"""Three-dimensional smooth maps: evaluation, iteration, spectra, periodic orbits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DomainEscape,
    InverseDivergence,
    NoConvergence,
    NonHyperbolic,
    SingularJacobian,
)

__all__ = [
    "Box",
    "Annulus",
    "UnionDomain",
    "SmoothMap3",
    "identity_map",
    "linear_map",
    "iterate",
    "invert_point",
    "period_jacobian",
    "jacobian_fd",
    "jacobian_error",
    "eigenvalues3",
    "PeriodicPoint",
    "SpectralClass",
    "find_periodic_orbit",
    "classify_saddle",
    "NEWTON_TOL",
    "HYPERBOLIC_TOL",
    "invariant_subspace",
]

NEWTON_TOL = 1e-12
HYPERBOLIC_TOL = 1e-9


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        ok = np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=-1)
        return bool(ok) if ok.ndim == 0 else ok

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, 3))

    @classmethod
    def cube(cls, half_width: float, center=(0.0, 0.0, 0.0)) -> "Box":
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width))


@dataclass(frozen=True)
class Annulus:
    """Solid annulus ``r_lo <= |(x - cx, y - cy)| <= r_hi``, ``t_lo <= z <= t_hi``."""

    r_lo: float
    r_hi: float
    t_lo: float
    t_hi: float
    center: tuple = (0.0, 0.0, 0.0)

    def contains(self, x):
        x = np.asarray(x, dtype=float) - np.asarray(self.center)
        r = np.hypot(x[..., 0], x[..., 1])
        ok = (r >= self.r_lo) & (r <= self.r_hi) & (x[..., 2] >= self.t_lo) & (x[..., 2] <= self.t_hi)
        return bool(ok) if np.ndim(ok) == 0 else ok

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        r = np.sqrt(rng.uniform(self.r_lo ** 2, self.r_hi ** 2, n))
        th = rng.uniform(0.0, 2 * np.pi, n)
        t = rng.uniform(self.t_lo, self.t_hi, n)
        return np.column_stack([r * np.cos(th), r * np.sin(th), t]) + np.asarray(self.center)


@dataclass(frozen=True)
class UnionDomain:
    parts: tuple

    def contains(self, x):
        out = self.parts[0].contains(x)
        for p in self.parts[1:]:
            out = out | p.contains(x)
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        which = rng.integers(0, len(self.parts), n)
        pts = np.empty((n, 3))
        for i, p in enumerate(self.parts):
            m = which == i
            if m.any():
                pts[m] = p.sample(rng, int(m.sum()))
        return pts


# --------------------------------------------------------------------------
# maps


@dataclass
class SmoothMap3:
    """A diffeomorphism piece of R^3 with an analytic Jacobian.

    ``eval`` and ``jacobian`` accept a point of shape ``(3,)`` or a batch of
    shape ``(N, 3)`` and return ``(3,)``/``(N, 3)`` and ``(3, 3)``/``(N, 3, 3)``.
    ``domain`` is ``None`` for all of R^3. ``fd_step`` optionally returns the
    finite-difference step to use at a point (maps with fine structure, such
    as the Denjoy skew product, supply one).
    """

    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    domain: object = None
    label: str = ""
    fd_step: Callable[[np.ndarray], float] | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def in_domain(self, x) -> bool:
        return True if self.domain is None else bool(self.domain.contains(x))


def identity_map(domain=None) -> SmoothMap3:
    return SmoothMap3(
        eval=lambda x: np.array(x, dtype=float),
        jacobian=lambda x: np.broadcast_to(np.eye(3), np.shape(x)[:-1] + (3, 3)).copy(),
        domain=domain,
        label="identity",
    )


def linear_map(matrix, center=(0.0, 0.0, 0.0), domain=None, label="linear") -> SmoothMap3:
    """``x -> center + M (x - center)``."""
    M = np.array(matrix, dtype=float)
    c = np.asarray(center, dtype=float)

    def f(x):
        x = np.asarray(x, dtype=float)
        return c + (x - c) @ M.T

    def jac(x):
        return np.broadcast_to(M, np.shape(x)[:-1] + (3, 3)).copy()

    return SmoothMap3(f, jac, domain=domain, label=label, meta={"matrix": M, "center": c})


def invert_point(fmap: SmoothMap3, y, guess=None, tol: float = 1e-12, max_iter: int = 60):
    """Solve ``fmap(x) = y`` by damped Newton iteration."""
    y = np.asarray(y, dtype=float)
    x = y.copy() if guess is None else np.asarray(guess, dtype=float).copy()
    scale = 1.0 + np.linalg.norm(y)
    res = fmap.eval(x) - y
    rn = np.linalg.norm(res)
    for _ in range(max_iter):
        if rn < tol * scale:
            return x
        try:
            step = np.linalg.solve(fmap.jacobian(x), res)
        except np.linalg.LinAlgError as exc:
            raise InverseDivergence(f"singular jacobian while inverting at {x}") from exc
        lam = 1.0
        for _ in range(30):
            xn = x - lam * step
            rnew = fmap.eval(xn) - y
            if np.all(np.isfinite(rnew)) and np.linalg.norm(rnew) < rn:
                break
            lam *= 0.5
        else:
            raise InverseDivergence(f"damped Newton stalled inverting {y}")
        x, res, rn = xn, rnew, np.linalg.norm(rnew)
    if rn < tol * scale:
        return x
    raise InverseDivergence(f"no convergence inverting {y} (residual {rn:.3g})")


def iterate(fmap: SmoothMap3, x, n: int, inverse_tol: float = 1e-10) -> np.ndarray:
    """Return the orbit ``x, f(x), ..., f^n(x)`` (or backward for ``n < 0``)
    as an array of shape ``(|n| + 1, 3)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((abs(n) + 1, 3))
    out[0] = x
    if not fmap.in_domain(x):
        raise DomainEscape(0, x)
    for k in range(1, abs(n) + 1):
        if n > 0:
            x = fmap.eval(x)
        else:
            x = invert_point(fmap, x)
            if np.linalg.norm(fmap.eval(x) - out[k - 1]) >= inverse_tol * (1 + np.linalg.norm(x)):
                raise InverseDivergence(f"inverse residual too large at step {k}")
        if not np.all(np.isfinite(x)) or not fmap.in_domain(x):
            raise DomainEscape(k, x)
        out[k] = x
    return out


def period_jacobian(fmap: SmoothMap3, x, period: int):
    """Return ``(f^period(x), D f^period(x))`` via the chain rule along the orbit."""
    x = np.asarray(x, dtype=float)
    J = np.eye(3)
    for _ in range(period):
        J = fmap.jacobian(x) @ J
        x = fmap.eval(x)
    return x, J


def _default_step(x):
    return 1e-6 * (1.0 + np.linalg.norm(x))


def jacobian_fd(fmap: SmoothMap3, x, h: float | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of ``fmap`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = fmap.fd_step(x) if fmap.fd_step is not None else _default_step(x)
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (fmap.eval(x + e) - fmap.eval(x - e)) / (2 * h)
    return J


def jacobian_error(fmap: SmoothMap3, points) -> float:
    """Maximum over ``points`` of ``|J_fd - J|_F / max(|J|_F, 1)``."""
    worst = 0.0
    for x in np.atleast_2d(points):
        J = np.asarray(fmap.jacobian(x))
        err = np.linalg.norm(jacobian_fd(fmap, x) - J) / max(np.linalg.norm(J), 1.0)
        worst = max(worst, err)
    return worst


# --------------------------------------------------------------------------
# spectra


def _cubic_newton(b, c, d, r, steps=3):
    for _ in range(steps):
        f = ((r + b) * r + c) * r + d
        fp = (3 * r + 2 * b) * r + c
        if fp == 0.0:
            break
        rn = r - f / fp
        if not math.isfinite(rn):
            break
        if abs(((rn + b) * rn + c) * rn + d) > abs(f):
            break
        r = rn
    return r


def eigenvalues3(M) -> np.ndarray:
    """Eigenvalues of a real 3x3 matrix from its characteristic cubic.

    Non-real roots are produced as an exact conjugate pair. The result is
    sorted by modulus (then by imaginary part).
    """
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    c2 = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
          + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
          + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
    det = float(np.linalg.det(M))
    # lambda^3 + b lambda^2 + c lambda + d
    b, c, d = -tr, c2, -det
    p = c - b * b / 3.0
    q = 2 * b ** 3 / 27.0 - b * c / 3.0 + d
    scale = max(1.0, abs(b), abs(c) ** 0.5, abs(d) ** (1 / 3))
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc > 1e-28 * scale ** 6:
        sq = math.sqrt(disc)
        A = -math.copysign(1.0, q) * (abs(q) / 2 + sq) ** (1 / 3)
        B = -p / (3 * A) if A != 0.0 else 0.0
        r = _cubic_newton(b, c, d, A + B - b / 3)
        P = r - tr
        Q = det / r if abs(r) ** 3 >= abs(det) and r != 0.0 else c2 + r * P
        qd = P * P - 4 * Q
        if qd < 0:
            im = math.sqrt(-qd) / 2
            roots = [complex(r), complex(-P / 2, im), complex(-P / 2, -im)]
        else:
            s = math.sqrt(qd)
            r1 = (-P - math.copysign(s, P)) / 2 if P != 0 else -s / 2
            r2 = Q / r1 if r1 != 0 else s / 2
            roots = [complex(r), complex(r1), complex(r2)]
    else:
        if p >= 0.0:  # triple root up to rounding
            rr = [-b / 3] * 3
        else:
            m = 2 * math.sqrt(-p / 3)
            arg = 3 * q / (p * m)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg) / 3
            rr = [m * math.cos(phi - 2 * math.pi * k / 3) - b / 3 for k in range(3)]
            rr = [_cubic_newton(b, c, d, r) for r in rr]
        roots = [complex(r) for r in rr]
    roots.sort(key=lambda z: (abs(z), z.imag))
    return np.array(roots, dtype=complex)


# --------------------------------------------------------------------------
# periodic points


@dataclass
class PeriodicPoint:
    location: np.ndarray
    period: int
    multipliers: np.ndarray
    u_ind: int
    stable_nonreal: bool
    unstable_nonreal: bool
    residual: float = 0.0
    period_jacobian: np.ndarray | None = None

    @classmethod
    def from_jacobian(cls, location, period, J, residual=0.0) -> "PeriodicPoint":
        mult = eigenvalues3(J)
        mods = np.abs(mult)
        nonreal = np.abs(mult.imag) > 0
        return cls(
            location=np.asarray(location, dtype=float),
            period=period,
            multipliers=mult,
            u_ind=int(np.sum(mods > 1.0)),
            stable_nonreal=bool(np.any(nonreal & (mods < 1.0))),
            unstable_nonreal=bool(np.any(nonreal & (mods > 1.0))),
            residual=residual,
            period_jacobian=np.asarray(J, dtype=float),
        )


def find_periodic_orbit(
    fmap: SmoothMap3,
    seed,
    period: int = 1,
    tol: float = NEWTON_TOL,
    max_iter: int = 50,
) -> PeriodicPoint:
    """Newton's method on ``f^period(x) - x`` with step-halving damping."""
    x = np.asarray(seed, dtype=float).copy()

    def residual(z):
        y, J = period_jacobian(fmap, z, period)
        return y - z, J

    F, J = residual(x)
    fn = np.linalg.norm(F)
    for _ in range(max_iter):
        if not np.isfinite(fn):
            break
        if fn < tol:
            return PeriodicPoint.from_jacobian(x, period, J, residual=fn)
        A = J - np.eye(3)
        if not np.all(np.isfinite(A)):
            break
        if np.linalg.cond(A) > 1e14:
            raise SingularJacobian(f"Newton matrix singular near {x}")
        step = np.linalg.solve(A, F)
        lam = 1.0
        for _ in range(31):
            xn = x - lam * step
            with np.errstate(all="ignore"):
                Fn, Jn = residual(xn)
            fnn = np.linalg.norm(Fn)
            if np.isfinite(fnn) and fnn < fn:
                break
            lam *= 0.5
        else:
            break
        x, F, J, fn = xn, Fn, Jn, fnn
    if np.isfinite(fn) and fn < tol:
        return PeriodicPoint.from_jacobian(x, period, J, residual=fn)
    raise NoConvergence(f"periodic orbit search from {seed} did not converge (residual {fn:.3g})")


@dataclass(frozen=True)
class SpectralClass:
    u_ind: int
    stable_nonreal: bool
    unstable_nonreal: bool
    real_central: bool
    central_expanding_real: bool
    central_contracting_real: bool


def _simple_real(m, others) -> bool:
    if m.imag != 0.0:
        return False
    return not any(abs(o - m) <= 1e-9 * max(1.0, abs(m)) for o in others)


def classify_saddle(p: PeriodicPoint | np.ndarray) -> SpectralClass:
    """Spectral flags of a hyperbolic periodic point.

    The central multipliers are the weakest expanding one (smallest modulus
    above 1) and the weakest contracting one (largest modulus below 1);
    ``real_central`` holds when either of them is real and simple.
    """
    mult = np.asarray(p.multipliers if isinstance(p, PeriodicPoint) else p, dtype=complex)
    mods = np.abs(mult)
    if np.any(np.abs(mods - 1.0) <= HYPERBOLIC_TOL):
        raise NonHyperbolic(f"multiplier on the unit circle: {mult}")
    unstable = [m for m in mult if abs(m) > 1]
    stable = [m for m in mult if abs(m) < 1]

    def central(block, weakest):
        if not block:
            return False
        m = weakest(block, key=abs)
        rest = list(mult)
        rest.remove(m)
        return _simple_real(m, rest)

    ce = central(unstable, min)
    cc = central(stable, max)
    return SpectralClass(
        u_ind=len(unstable),
        stable_nonreal=any(m.imag != 0 for m in stable),
        unstable_nonreal=any(m.imag != 0 for m in unstable),
        real_central=ce or cc,
        central_expanding_real=ce,
        central_contracting_real=cc,
    )


def invariant_subspace(M, select: Callable[[complex], bool]) -> np.ndarray:
    """Orthonormal real basis (rows) of the invariant subspace of ``M`` spanned
    by eigenvalues for which ``select`` is true. Complex pairs contribute the
    real and imaginary parts of one eigenvector."""
    w, V = np.linalg.eig(np.asarray(M, dtype=float))
    cols = []
    used = np.zeros(len(w), dtype=bool)
    for i, lam in enumerate(w):
        if used[i] or not select(lam):
            continue
        used[i] = True
        if abs(lam.imag) > 1e-14 * max(1.0, abs(lam)):
            cols.append(V[:, i].real)
            cols.append(V[:, i].imag)
            j = int(np.argmin(np.abs(w - np.conj(lam)) + used * 1e300))
            used[j] = True
        else:
            cols.append(V[:, i].real)
    if not cols:
        return np.zeros((0, 3))
    Q, _ = np.linalg.qr(np.column_stack(cols))
    return Q.T.copy()
