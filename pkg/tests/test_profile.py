from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from wanderlab.profile import GAP_TABLE, flat_top, flat_top_deriv, gap_weight, gap_weight_integral


def test_plateaus_are_exact():
    s = np.array([0.0, 0.3, 0.5, 1.0, 1.5, 7.0])
    out = flat_top(s, 0.5, 1.0)
    assert out[0] == 1.0 and out[1] == 1.0 and out[2] == 1.0
    assert out[3] == 0.0 and out[4] == 0.0 and out[5] == 0.0


def test_transition_formula():
    s = 0.7
    u = (s - 0.5) / 0.5
    assert flat_top(s, 0.5, 1.0) == pytest.approx(math.exp(1 - 1 / (1 - u * u)), rel=1e-15)


@given(st.floats(0.51, 0.99))
def test_derivative_matches_finite_difference(s):
    h = 1e-6
    fd = (flat_top(s + h, 0.5, 1.0) - flat_top(s - h, 0.5, 1.0)) / (2 * h)
    assert flat_top_deriv(s, 0.5, 1.0) == pytest.approx(fd, abs=1e-6)


@given(st.floats(0.0, 1.0))
def test_gap_weight_symmetric(t):
    assert gap_weight(t) == pytest.approx(gap_weight(1.0 - t), abs=1e-15)


def test_gap_integral_against_quadrature():
    edge, _ = quad(gap_weight, 0.0, 0.25, epsabs=1e-14, epsrel=1e-13)
    assert GAP_TABLE.edge == pytest.approx(edge, abs=1e-14)
    assert GAP_TABLE.total == pytest.approx(0.5 + 2 * edge, abs=1e-14)


@settings(max_examples=50)
@given(st.floats(0.0, 1.0))
def test_cumulative_integral_against_quadrature(t):
    ref, _ = quad(gap_weight, 0.0, t, epsabs=1e-14, epsrel=1e-14, limit=200)
    assert gap_weight_integral(t) == pytest.approx(ref, abs=1e-12)
