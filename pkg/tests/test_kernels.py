from __future__ import annotations

import math

import numpy as np
import pytest

from wanderlab import kernels
from wanderlab.denjoy import GapLaw, build_denjoy

GOLDEN = (math.sqrt(5) - 1) / 2

try:
    from wanderlab import _ckernels  # noqa: F401
    HAVE_C = True
except ImportError:  # pragma: no cover
    HAVE_C = False


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")
def test_backends_agree(rng):
    py = build_denjoy(GOLDEN, GapLaw(0.5), i_max=2000, backend="python")
    cy = build_denjoy(GOLDEN, GapLaw(0.5), i_max=2000, backend="cython")
    y = rng.uniform(0, 1, 5000)
    gp, dp = py.eval(y)
    gc, dc = cy.eval(y)
    assert np.max(np.abs(gp - gc)) <= 4e-16
    assert np.max(np.abs(dp - dc)) <= 1e-15
    op = py.orbit(0.123, 20000, store=True)
    oc = cy.orbit(0.123, 20000, store=True)
    assert op[0] == pytest.approx(oc[0], abs=1e-12)
    assert op[2] == pytest.approx(oc[2], abs=1e-9)
    assert np.max(np.abs(op[3] - oc[3])) <= 1e-12


def test_scalar_step_matches_vector_eval(rng):
    from wanderlab import _pykernels
    d = build_denjoy(GOLDEN, GapLaw(0.5), i_max=2000, backend="python")
    lists, _ = d._tables
    y = rng.uniform(0, 1, 200)
    gv, dv = _pykernels.denjoy_eval(y, d._tables)
    for yi, g, dd in zip(y, gv, dv):
        gs, ds = _pykernels._step(yi, lists)
        assert gs == pytest.approx(g, abs=1e-15)
        assert ds == pytest.approx(dd, abs=1e-15)
