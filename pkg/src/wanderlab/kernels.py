"""Kernel backend selection.

The compiled extension ``wanderlab._ckernels`` is used when it imports;
otherwise the numpy/pure-Python versions in ``wanderlab._pykernels`` are
used. Set ``WANDERLAB_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("WANDERLAB_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python" or the default)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


prepare = _impl.prepare
denjoy_eval = _impl.denjoy_eval
denjoy_orbit = _impl.denjoy_orbit
