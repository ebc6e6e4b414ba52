"""Continued fractions and the irrationality certificate for rotation numbers."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import RationalRotation

MIN_CF_LENGTH = 20


def continued_fraction(x: float, terms: int = 64) -> list[int]:
    """Partial quotients ``[a0; a1, a2, ...]`` of the exact binary value of ``x``.

    The expansion of a double always terminates; it stops early when the
    remainder vanishes.
    """
    q = Fraction(x)
    out = []
    for _ in range(terms):
        a = q.numerator // q.denominator
        out.append(int(a))
        rem = q - a
        if rem == 0:
            break
        q = 1 / rem
    return out


def convergents(cf: Sequence[int]) -> list[Fraction]:
    p0, p1 = 1, cf[0]
    q0, q1 = 0, 1
    out = [Fraction(p1, q1)]
    for a in cf[1:]:
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        out.append(Fraction(p1, q1))
    return out


def value_of(cf: Sequence[int]) -> float:
    return float(convergents(cf)[-1])


def check_irrational(alpha: float, cf: Sequence[int] | None = None,
                     min_length: int = MIN_CF_LENGTH) -> list[int]:
    """Return the certifying partial quotients of ``alpha``.

    A rotation number is accepted as irrational when it carries at least
    ``min_length`` partial quotients (all positive after the first) whose
    last convergent ``p/q`` approximates ``alpha`` to within ``1/q^2``.
    """
    if cf is None:
        cf = continued_fraction(alpha)
    cf = [int(a) for a in cf]
    if len(cf) < min_length:
        raise RationalRotation(
            f"rotation {alpha!r} has only {len(cf)} partial quotients (need {min_length})")
    if any(a <= 0 for a in cf[1:]):
        raise RationalRotation("partial quotients after the first must be positive")
    last = convergents(cf[:min_length])[-1]
    if abs(Fraction(alpha) - last) > Fraction(1, last.denominator ** 2):
        raise RationalRotation(f"continued fraction does not match rotation {alpha!r}")
    return cf
