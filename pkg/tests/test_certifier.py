from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from wanderlab.certifier import (CertifyOptions, Tube, admissible_delta, assemble_wandering_model, certify,
                                 check_containment, make_tubes, write_certificate)
from wanderlab.denjoy import GapLaw, build_denjoy
from wanderlab.errors import DeltaTooLarge, HorizonBeyondTable
from wanderlab.hopf import HopfFamilyParams, hopf_map, invariant_circle
from wanderlab.mapcore import jacobian_error

GOLDEN = (math.sqrt(5) - 1) / 2
HOPF = HopfFamilyParams(mu=0.04, a=1.0, gamma=0.5)
FAST = CertifyOptions(horizon=100, diameter_tol=1e-4, omega_seeds=4, omega_start=1000, omega_stop=3000,
                      omega_stride=500, resolution=1e-2, lyapunov_iterates=10_000, density_iterates=100_000,
                      density_eps=1e-2)


@pytest.fixture(scope="module")
def model(small_denjoy):
    return assemble_wandering_model(HOPF, small_denjoy)


@pytest.fixture(scope="module")
def tubes(model, small_denjoy):
    rs = model.meta["radius"]
    return make_tubes(small_denjoy, rs, 0.4 * admissible_delta(small_denjoy, rs, 101), 101)


def _cart(r, theta, t):
    return np.array([r * math.cos(2 * math.pi * theta), r * math.sin(2 * math.pi * theta), t])


def _polar(X):
    return math.hypot(X[0], X[1]), (math.atan2(X[1], X[0]) / (2 * math.pi)) % 1.0, X[2]


# -- model -------------------------------------------------------------------


def test_circle_carries_denjoy_map(model, small_denjoy, rng):
    rs = model.meta["radius"]
    assert rs == pytest.approx(0.2, abs=1e-15)
    for th in rng.random(50):
        r, phi, t = _polar(model.eval(_cart(rs, th, 0.0)))
        assert abs(r - rs) < 1e-15 and t == 0.0
        assert abs((phi - small_denjoy(np.array([th]))[0] + 0.5) % 1.0 - 0.5) < 1e-14


def test_normal_rates(model):
    rs = model.meta["radius"]
    r, _, t = _polar(model.eval(_cart(1.1 * rs, 0.3, 0.5)))
    assert (r - rs) / (0.1 * rs) == pytest.approx(0.92, abs=0.02)
    assert t == 0.25
    assert model.meta["radial_multiplier"] == pytest.approx(invariant_circle(HOPF).radial_multiplier, abs=1e-15)


def test_mass_zero_reduces_to_normal_form(rng):
    d0 = build_denjoy(GOLDEN, GapLaw(0.0))
    m0 = assemble_wandering_model(HOPF, d0)
    hm = hopf_map(replace(HOPF, beta=2 * math.pi * GOLDEN))
    X = m0.domain.sample(rng, 500)
    np.testing.assert_allclose(m0.eval(X), hm.eval(X), atol=1e-14)
    np.testing.assert_allclose(m0.jacobian(X), hm.jacobian(X), atol=1e-13)


def test_model_jacobian(model, rng):
    assert jacobian_error(model, model.domain.sample(rng, 300)) < 1e-5


# -- tubes ---------------------------------------------------------------------


def test_tubes_pairwise_disjoint(tubes, model):
    assert len(tubes) == 101
    rs = model.meta["radius"]
    # sorting oracle on the embedded arcs: consecutive closed arcs separated by more than 2 delta
    arcs = sorted(tb.base_arc for tb in tubes[:100])
    delta = tubes[0].delta
    for (u0, v0), (u1, _) in zip(arcs, arcs[1:] + [(arcs[0][0] + 1.0, None)]):
        chord = 2 * rs * math.sin(math.pi * (u1 - v0))
        assert chord > 2 * delta


def test_tube_delta_bound(small_denjoy, model):
    rs = model.meta["radius"]
    dmax = admissible_delta(small_denjoy, rs, 100)
    with pytest.raises(DeltaTooLarge) as err:
        make_tubes(small_denjoy, rs, 2 * dmax, 100)
    assert err.value.delta_max == dmax


def test_single_tube(small_denjoy, model):
    rs = model.meta["radius"]
    tb = make_tubes(small_denjoy, rs, 0.4 * admissible_delta(small_denjoy, rs, 1), 1)
    assert len(tb) == 1 and tb[0].index == 0


def test_no_tubes_without_gaps(model):
    d0 = build_denjoy(GOLDEN, GapLaw(0.0))
    with pytest.raises(ValueError):
        make_tubes(d0, 0.2, 1e-3, 10)


def test_tube_count_bounded(small_denjoy):
    with pytest.raises(HorizonBeyondTable):
        make_tubes(small_denjoy, 0.2, 1e-6, small_denjoy.i_max + 1)


def test_signed_margin(tubes):
    tb = tubes[0]
    inside = tb.points(0.5, 0.3 * tb.delta, 1.0)
    assert tb.signed_margin(inside) == pytest.approx(0.7 * tb.delta, rel=1e-9)
    lateral = tb.boundary(65, 32)[: 65 * 32]
    assert np.all(np.abs(tb.signed_margin(lateral)) < 1e-15)
    caps = tb.boundary(65, 32)[65 * 32:]
    assert np.all(tb.signed_margin(caps) >= -1e-15)
    outside = tb.points(0.5, 1.5 * tb.delta, 0.0)
    assert tb.signed_margin(outside) < 0.0


# -- containment -------------------------------------------------------------


def test_containment_first_hundred(model, tubes):
    res = check_containment(model, tubes)
    assert res.verdict == "pass"
    assert len(res.margins) == 100 and np.all(res.margins > 0.0)


def test_refinement_never_raises_margin(model, tubes):
    coarse = check_containment(model, tubes[:6], max_refine=0)
    fine = check_containment(model, tubes[:6], max_refine=3)
    assert np.all(fine.margins <= coarse.margins)


@pytest.mark.parametrize("mu,gamma,frac", [(0.04, 0.5, 0.4), (1e-4, 0.99, 0.999)])
def test_margin_scales_with_contraction_gap(small_denjoy, mu, gamma, frac):
    # the image of a tube boundary sits at (multiplier * delta) from the core
    # circle, so the margin is about (1 - multiplier) * delta
    m = assemble_wandering_model(HopfFamilyParams(mu=mu, gamma=gamma), small_denjoy)
    rs = m.meta["radius"]
    delta = frac * admissible_delta(small_denjoy, rs, 20)
    res = check_containment(m, make_tubes(small_denjoy, rs, delta, 20))
    gap = 1.0 - max(abs(m.meta["radial_multiplier"]), abs(gamma))
    ratio = res.margins.min() / delta
    assert 0.5 * gap < ratio <= 1.01 * gap


def test_overlapping_tube_fails_containment(model, tubes):
    bad = list(tubes[:3])
    tb = bad[2]
    bad[2] = Tube(tb.index, tb.base_arc, tb.delta * 1e-3, tb.radius, tb.center)
    assert check_containment(model, bad).verdict == "fail"


# -- certificate -------------------------------------------------------------


@pytest.fixture(scope="module")
def cert(model, tubes, small_denjoy):
    return certify(model, tubes, small_denjoy, options=FAST)


def test_certificate_passes(cert):
    assert cert.status == "pass"
    assert set(cert.verdicts) == {"containment", "disjoint", "contracting", "omega_limit", "nonhyperbolic",
                                  "no_periodic", "transitive_heuristic", "certificate"}
    assert all(v == "pass" for v in cert.verdicts.values())


def test_diameter_decay_bound(cert, small_denjoy):
    d = cert.diameters
    assert cert.k0 is not None
    assert np.all(np.diff(d[cert.k0:]) < 0.0)
    ks = np.arange(len(d))
    assert np.all(d[cert.k0:] <= cert.decay_constant * cert.decay_rate ** ks[cert.k0:] * (1 + 1e-12))
    lengths = small_denjoy.gaps.lengths(np.arange(0, 101))
    ratio_sup = float(np.max(lengths[1:] / lengths[:-1]))
    assert cert.decay_rate <= max(0.92, 0.5, ratio_sup) + 0.01


def test_certificate_data_reverifiable(cert):
    assert np.all(cert.containment_margins > 0.0) and np.all(cert.containment_stable)
    assert cert.omega_distance < cert.omega_threshold
    assert np.all(cert.periodic_displacement > 0.0)
    assert abs(cert.lyapunov) < FAST.lyapunov_tol and max(cert.normal_exponents) < 0.0


def test_horizon_beyond_table(model, tubes, small_denjoy):
    with pytest.raises(HorizonBeyondTable):
        certify(model, tubes, small_denjoy, horizon=small_denjoy.i_max, options=FAST)
    with pytest.raises(HorizonBeyondTable):
        certify(model, tubes, small_denjoy, horizon=500, options=FAST)


def test_corrupted_tubes_fail(model, tubes, small_denjoy):
    bad = list(tubes)
    tb = bad[7]
    u, v = bad[3].base_arc
    bad[7] = Tube(tb.index, (u + 0.25 * (v - u), v + 0.25 * (v - u)), tb.delta, tb.radius, tb.center)
    c = certify(model, bad, small_denjoy, options=replace(FAST, horizon=20))
    assert not c.disjoint
    assert c.verdicts["disjoint"] == "fail" and c.status == "fail"


def test_bundle_files(cert, tmp_path):
    write_certificate(cert, tmp_path)
    margins = (tmp_path / "margins.csv").read_text().splitlines()
    assert margins[0] == "i,m_i" and len(margins) == 1 + cert.horizon
    assert float(margins[1].split(",")[1]) == cert.containment_margins[0]
    diams = (tmp_path / "diameters.csv").read_text().splitlines()
    assert diams[0] == "k,diam" and len(diams) == cert.horizon + 2
    omega = (tmp_path / "omega.csv").read_text().splitlines()
    assert omega[0] == "seed,k,dist"
    dists = [float(r.split(",")[2]) for r in omega[1:]]
    assert max(dists) == cert.omega_distance
    verdict = dict(line.split(": ") for line in (tmp_path / "verdict.txt").read_text().splitlines())
    assert verdict == cert.verdicts


def test_period_two_model(small_denjoy, rng):
    hp = replace(HOPF, period=2)
    m = assemble_wandering_model(hp, small_denjoy)
    c0, c1 = m.meta["centers"]
    rs = m.meta["radius"]
    X = np.array(c0) + _cart(rs, 0.3, 0.0)
    Y = m.eval(X)
    np.testing.assert_allclose(Y - np.array(c1), X - np.array(c0), atol=1e-15)
    Z = m.eval(Y) - np.array(c0)
    _, phi, _ = _polar(Z)
    assert abs(phi - small_denjoy(np.array([0.3]))[0]) < 1e-14
    tb = make_tubes(small_denjoy, rs, 0.4 * admissible_delta(small_denjoy, rs, 21), 21, center=c0)
    res = certify(m, tb, small_denjoy, options=replace(FAST, horizon=20, diameter_tol=1e-2))
    assert res.disjoint and res.verdicts["containment"] == "pass"
