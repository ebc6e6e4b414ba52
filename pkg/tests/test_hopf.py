from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from wanderlab.errors import IllConditioned, NoCrossing, NotBorn
from wanderlab.hopf import (HopfFamilyParams, PolynomialRemainder, estimate_cubic_coeff, hopf_map,
                            invariant_circle, ns_scan, write_ns_csv)
from wanderlab.mapcore import jacobian_error, linear_map
from wanderlab.models import rotation_matrix

BETA = 2 * math.pi * (math.sqrt(5) - 1) / 2


def _polar(X):
    return np.hypot(X[..., 0], X[..., 1]), np.arctan2(X[..., 1], X[..., 0])


# -- the map ---------------------------------------------------------------


def test_truncated_example_point():
    p = HopfFamilyParams(mu=0.04, a=1.0, beta=BETA, gamma=0.5)
    out = hopf_map(p).eval(np.array([0.2, 0.0, 1.0]))
    r_img = 1.04 * 0.2 - 0.2**3
    assert r_img == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(out, [0.2 * math.cos(BETA), 0.2 * math.sin(BETA), 0.5], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(0.1, 5.0), st.floats(-6.0, 6.0), st.floats(-0.99, 0.99).filter(lambda g: abs(g) > 1e-3))
def test_origin_fixed(mu, a, beta, gamma):
    p = HopfFamilyParams(mu=mu, a=a, beta=beta, gamma=gamma)
    assert np.array_equal(hopf_map(p).eval(np.zeros(3)), np.zeros(3))


def test_negative_mu_contracts(rng):
    fmap = hopf_map(HopfFamilyParams(mu=-0.1))
    r = rng.uniform(1e-4, 0.3, 500)
    th = rng.uniform(0, 2 * np.pi, 500)
    X = np.stack([r * np.cos(th), r * np.sin(th), np.zeros_like(r)], axis=1)
    r_img, _ = _polar(fmap.eval(X))
    assert np.all(r_img < r)


def test_polar_form_matches_closed_form(rng):
    ho = PolynomialRemainder(0.7, -0.4)
    p = HopfFamilyParams(mu=0.03, a=1.3, beta=1.1, gamma=-0.6, higher_order=ho)
    r = rng.uniform(0.0, 0.2, 200)
    th = rng.uniform(-np.pi, np.pi, 200)
    t = rng.uniform(-1, 1, 200)
    out = hopf_map(p).eval(np.stack([r * np.cos(th), r * np.sin(th), t], axis=1))
    r_exp = (1.03) * r - 1.3 * r**3 + 0.7 * r**4
    th_exp = th + 1.1 - 0.4 * r**2
    np.testing.assert_allclose(out[:, 0], r_exp * np.cos(th_exp), atol=1e-15)
    np.testing.assert_allclose(out[:, 1], r_exp * np.sin(th_exp), atol=1e-15)
    np.testing.assert_allclose(out[:, 2], -0.6 * t, atol=0)


def test_linear_part_at_origin():
    p = HopfFamilyParams(mu=0.02, beta=0.7, gamma=0.3, higher_order=PolynomialRemainder(1.0, 1.0))
    J = hopf_map(p).jacobian(np.zeros(3))
    expected = np.zeros((3, 3))
    expected[:2, :2] = rotation_matrix(1.02, 0.7 / (2 * math.pi))
    expected[2, 2] = 0.3
    np.testing.assert_allclose(J, expected, atol=1e-15)


@pytest.mark.parametrize("ho", [None, PolynomialRemainder(0.5, 2.0)])
def test_jacobian_matches_finite_differences(rng, ho):
    fmap = hopf_map(HopfFamilyParams(mu=0.04, higher_order=ho))
    pts = rng.uniform(-0.3, 0.3, (1000, 3))
    pts[0] = 0.0
    assert jacobian_error(fmap, pts) < 1e-5


# -- invariant circle -------------------------------------------------------


def test_circle_example_values():
    c = invariant_circle(HopfFamilyParams(mu=0.04, a=1.0))
    assert c.radius == pytest.approx(0.2, abs=1e-15)
    assert c.radial_multiplier == pytest.approx(1.04 - 3 * 0.04, abs=1e-15)
    assert c.normal_multiplier == 0.5 and c.attracting
    assert invariant_circle(HopfFamilyParams(mu=0.01, a=4.0)).radius == pytest.approx(0.05, abs=1e-15)


@pytest.mark.parametrize("mu", [0.0, -0.01])
def test_not_born(mu):
    with pytest.raises(NotBorn):
        invariant_circle(HopfFamilyParams(mu=mu))


@pytest.mark.parametrize("mu", [1e-4, 1e-3, 0.01, 0.04, 0.09])
def test_truncated_radius_exact(mu):
    a = 1.7
    r = invariant_circle(HopfFamilyParams(mu=mu, a=a)).radius
    oracle = brentq(lambda s: (1 + mu) * s - a * s**3 - s, 0.5 * math.sqrt(mu / a), 2 * math.sqrt(mu / a),
                    xtol=1e-16, rtol=1e-15)
    assert abs(r - math.sqrt(mu / a)) < 1e-12
    assert abs(r - oracle) < 1e-12


def test_higher_order_radius_by_root_finding():
    p = HopfFamilyParams(mu=0.04, a=1.0, higher_order=PolynomialRemainder(0.8, 0.5))
    c = invariant_circle(p)
    oracle = brentq(lambda s: 1.04 * s - s**3 + 0.8 * s**4 - s, 0.1, 0.4, xtol=1e-16)
    assert abs(c.radius - oracle) < 1e-13
    assert c.radial_multiplier == pytest.approx(1.04 - 3 * oracle**2 + 3.2 * oracle**3, abs=1e-13)
    assert c.rotation == pytest.approx(BETA + 0.5 * oracle**2, abs=1e-15)


def test_circle_invariance_long_orbit():
    p = HopfFamilyParams(mu=0.04, a=1.0)
    fmap = hopf_map(p)
    r_star = invariant_circle(p).radius
    X = np.array([r_star, 0.0, 0.0])
    worst = 0.0
    for _ in range(10_000):
        X = fmap.eval(X)
        worst = max(worst, abs(math.hypot(X[0], X[1]) - r_star))
    assert worst < 1e-9


def test_attraction_and_normal_contraction():
    p = HopfFamilyParams(mu=0.04, a=1.0, gamma=0.5)
    fmap = hopf_map(p)
    r_star = invariant_circle(p).radius
    X = np.array([[0.7 * r_star, 0.0, 1.0], [0.0, 1.3 * r_star, -1.0]])
    for _ in range(20):
        Y = fmap.eval(X)
        assert np.array_equal(Y[:, 2], 0.5 * X[:, 2])
        X = Y
    for _ in range(1000):
        X = fmap.eval(X)
    r, _ = _polar(X)
    assert np.all(np.abs(r - r_star) < 1e-8)


# -- Neimark-Sacker scan ----------------------------------------------------


def test_scan_finds_crossing_at_zero():
    rep = ns_scan(HopfFamilyParams(mu=0.04))
    assert abs(rep.mu_star) < 1e-10
    assert abs(rep.multiplier - complex(math.cos(BETA), abs(math.sin(BETA)))) < 1e-9
    assert rep.modulus_slope == pytest.approx(1.0, abs=1e-6)
    assert not rep.strong_resonance


def test_scan_no_crossing():
    M = np.zeros((3, 3))
    M[:2, :2] = rotation_matrix(0.9, 0.15)
    M[2, 2] = 0.5
    with pytest.raises(NoCrossing):
        ns_scan(lambda mu: linear_map(M), mu_range=(-0.05, 0.05))


def test_scan_flags_quarter_turn_resonance():
    rep = ns_scan(HopfFamilyParams(mu=0.0, beta=math.pi / 2))
    assert rep.strong_resonance and rep.resonance_order == 4


def test_scan_csv(tmp_path):
    rep = ns_scan(HopfFamilyParams(mu=0.0), grid=5)
    path = tmp_path / "ns.csv"
    write_ns_csv(rep, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "mu,re_mult,im_mult,modulus"
    assert len(rows) == 6
    mu, re, im, mod = (float(v) for v in rows[3].split(","))
    assert mu == 0.0 and mod == pytest.approx(math.hypot(re, im), abs=1e-15)


# -- cubic coefficient ------------------------------------------------------


def test_cubic_fit_exact_data():
    fit = estimate_cubic_coeff(hopf_map(HopfFamilyParams(mu=0.02, a=1.0)))
    assert abs(fit.a - 1.0) < 1e-6 and abs(fit.mu - 0.02) < 1e-6


def test_cubic_fit_linear_map():
    fit = estimate_cubic_coeff(hopf_map(HopfFamilyParams(mu=0.02, a=0.0)))
    assert abs(fit.a) < 1e-9


def test_cubic_fit_with_quartic_term():
    p = HopfFamilyParams(mu=0.02, a=1.0, higher_order=PolynomialRemainder(0.1, 0.0))
    fit = estimate_cubic_coeff(hopf_map(p), r_max=0.05)
    assert abs(fit.a - 1.0) < 0.01


def test_cubic_fit_ill_conditioned():
    with pytest.raises(IllConditioned):
        estimate_cubic_coeff(hopf_map(HopfFamilyParams(mu=0.02)), r_min=1e-3, r_max=1e-3 * (1 + 1e-13))


def test_period_two_scan_matches_squared_multiplier():
    p = HopfFamilyParams(mu=0.04, beta=1.0)
    rep = ns_scan(replace(p, period=2), period=2)
    assert abs(rep.mu_star) < 1e-10
    assert abs(abs(rep.multiplier) - 1.0) < 1e-9
