from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wanderlab.errors import DomainEscape, NoConvergence, NonHyperbolic
from wanderlab.mapcore import (Annulus, Box, PeriodicPoint, SmoothMap3, UnionDomain, classify_saddle,
                               eigenvalues3, find_periodic_orbit, identity_map, invariant_subspace,
                               iterate, jacobian_error, linear_map, period_jacobian)
from wanderlab.models import SaddleFocusParams, make_saddle_focus

GOLDEN = (math.sqrt(5) - 1) / 2


def focus(theta=0.25, block="stable_xy", a=0.5, b=2.0):
    return make_saddle_focus(SaddleFocusParams(a, b, theta, block))


def test_identity_orbit():
    orb = iterate(identity_map(), (1, 2, 3), 5)
    assert orb.shape == (6, 3)
    assert np.all(orb == np.array([1.0, 2.0, 3.0]))


def test_focus_forward_and_backward():
    m = focus()
    fwd = iterate(m, (1, 0, 1), 1)[-1]
    assert fwd == pytest.approx([0.0, 0.5, 2.0], abs=1e-15)
    back = iterate(m, (1, 0, 1), -1)[-1]
    assert back == pytest.approx([0.0, -2.0, 0.5], abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_round_trip_on_linear_model(n, x):
    m = focus(GOLDEN, "unstable_xy", 0.5, 2.0)
    x = np.asarray(x) * 1e-3
    y = iterate(m, x, n)[-1]
    z = iterate(m, y, -n)[-1]
    assert np.linalg.norm(z - x) < 1e-8


def test_domain_escape():
    m = linear_map(2 * np.eye(3), domain=Box.cube(1.0))
    with pytest.raises(DomainEscape) as info:
        iterate(m, (0.3, 0, 0), 5)
    assert info.value.k == 2


def test_focus_fixed_point():
    p = find_periodic_orbit(focus(), (0.1, 0.1, 0.1))
    assert p.location == pytest.approx([0, 0, 0], abs=1e-12)
    expected = sorted([0.5j, -0.5j, 2.0], key=lambda z: (abs(z), z.imag))
    got = sorted(p.multipliers, key=lambda z: (abs(z), z.imag))
    assert np.allclose(got, expected, atol=1e-12)
    assert p.u_ind == 1 and p.stable_nonreal and not p.unstable_nonreal


def test_unstable_focus_fixed_point():
    p = find_periodic_orbit(focus(GOLDEN, "unstable_xy"), (0.1, 0.1, 0.1))
    assert p.u_ind == 2
    mods = sorted(np.abs(p.multipliers))
    assert mods == pytest.approx([0.5, 2.0, 2.0], abs=1e-12)
    args = sorted(abs(np.angle(p.multipliers[np.abs(p.multipliers) > 1])))
    assert args[0] == pytest.approx(2 * math.pi * (1 - GOLDEN), abs=1e-12)


def test_newton_idempotent():
    m = focus(GOLDEN, "unstable_xy")
    p = find_periodic_orbit(m, (0.1, 0.1, 0.1))
    q = find_periodic_orbit(m, p.location)
    assert np.linalg.norm(q.location - p.location) < 1e-12


def test_no_convergence():
    def f(x):
        x = np.asarray(x, dtype=float)
        return x + 1.0 + 0.1 * np.sin(x)

    def jac(x):
        return np.eye(3) + np.diag(0.1 * np.cos(np.asarray(x, dtype=float)))

    with pytest.raises(NoConvergence):
        find_periodic_orbit(SmoothMap3(f, jac), (50.0, 50.0, 50.0))


def test_classify_examples():
    c = classify_saddle(np.array([0.5j, -0.5j, 2.0]))
    assert c.u_ind == 1 and c.stable_nonreal and not c.unstable_nonreal and c.real_central
    c = classify_saddle(np.array([0.3, 1.5, 2.0]))
    assert c.u_ind == 2 and not c.stable_nonreal and not c.unstable_nonreal and c.real_central
    with pytest.raises(NonHyperbolic):
        classify_saddle(np.array([0.5, 1.0, 2.0]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_eigenvalues_against_numpy(entries):
    M = np.array(entries).reshape(3, 3)
    ours = np.sort_complex(eigenvalues3(M))
    scale = max(1.0, np.max(np.abs(np.linalg.eigvals(M))))
    # repeated roots are ill conditioned; compare the characteristic polynomial instead
    for lam in ours:
        assert abs(np.linalg.det(M - lam * np.eye(3))) <= 1e-8 * scale ** 3
    nonreal = ours[np.abs(ours.imag) > 0]
    assert len(nonreal) in (0, 2)
    if len(nonreal) == 2:
        assert nonreal[0] == np.conj(nonreal[1])


def test_invariant_subspace_of_focus():
    M = focus(GOLDEN, "unstable_xy").meta["matrix"]
    B = invariant_subspace(M, lambda z: abs(z) > 1)
    assert B.shape == (2, 3)
    assert np.allclose(B @ B.T, np.eye(2), atol=1e-12)
    assert np.allclose(np.abs(B[:, 2]), 0, atol=1e-12)


def test_period_jacobian_chain_rule():
    m = focus(GOLDEN, "unstable_xy")
    x, J = period_jacobian(m, (0.01, 0.02, 0.03), 3)
    M = m.meta["matrix"]
    assert np.allclose(J, np.linalg.matrix_power(M, 3), atol=1e-13)


def test_periodic_point_flags():
    p = PeriodicPoint.from_jacobian((0, 0, 0), 1, np.diag([0.3, 0.5, 2.5]))
    assert p.u_ind == 1 and not p.stable_nonreal


def test_domains_sample_inside(rng):
    for dom in (Box.cube(1.0, (1, 2, 3)), Annulus(0.1, 0.3, -1, 1),
                UnionDomain((Box.cube(0.5), Annulus(0.1, 0.2, 0, 1, center=(5, 0, 0))))):
        pts = dom.sample(rng, 500)
        assert pts.shape == (500, 3)
        assert np.all(dom.contains(pts))


def test_linear_jacobian_fd(rng):
    m = focus(GOLDEN, "unstable_xy")
    assert jacobian_error(m, rng.uniform(-1, 1, (200, 3))) < 1e-8
