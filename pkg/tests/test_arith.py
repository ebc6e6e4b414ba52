from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from wanderlab.arith import check_irrational, continued_fraction, convergents, value_of
from wanderlab.errors import RationalRotation

GOLDEN = (math.sqrt(5) - 1) / 2


def test_golden_quotients_are_ones():
    cf = continued_fraction(GOLDEN)
    assert cf[0] == 0
    # the double is a dyadic rational, so only the leading quotients are 1
    assert cf[1:30] == [1] * 29


def test_golden_convergents_are_fibonacci_ratios():
    conv = convergents([0] + [1] * 12)
    fib = [1, 1]
    while len(fib) < 14:
        fib.append(fib[-1] + fib[-2])
    for k, c in enumerate(conv[1:], start=1):
        assert c == Fraction(fib[k - 1], fib[k])


@given(st.integers(0, 2**40), st.integers(0, 40))
def test_dyadic_expansion_terminates_and_reconstructs(num, k):
    q = Fraction(num, 2**k)
    cf = continued_fraction(float(q), terms=200)
    assert convergents(cf)[-1] == q


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_double_value_recovered(x):
    assert value_of(continued_fraction(x, terms=200)) == x


def test_rational_rotation_rejected():
    with pytest.raises(RationalRotation):
        check_irrational(0.25)
    with pytest.raises(RationalRotation):
        check_irrational(0.0)


def test_golden_accepted_and_mismatch_rejected():
    assert len(check_irrational(GOLDEN)) >= 20
    with pytest.raises(RationalRotation):
        check_irrational(GOLDEN, cf=[0, 2] + [1] * 30)
    with pytest.raises(RationalRotation):
        check_irrational(GOLDEN, cf=[0] + [1] * 10)
