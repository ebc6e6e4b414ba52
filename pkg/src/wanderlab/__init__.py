"""Wandering domains near heterodimensional cycles: models, geometry, Denjoy
circle maps and a numerical wandering-domain certifier."""
from __future__ import annotations

from .certifier import (Tube, WanderingCertificate, assemble_wandering_model, certify,
                        check_containment, make_tubes)
from .denjoy import DenjoyMap, GapLaw, build_denjoy, rotation_number, verify_wandering
from .errors import WanderlabError
from .geometry import ManifoldPatch, TangencyReport, codimension_at, tangency_order
from .hopf import HopfFamilyParams, hopf_map, invariant_circle, ns_scan
from .kernels import BACKEND
from .mapcore import SmoothMap3

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DenjoyMap",
    "GapLaw",
    "HopfFamilyParams",
    "ManifoldPatch",
    "SmoothMap3",
    "TangencyReport",
    "Tube",
    "WanderingCertificate",
    "WanderlabError",
    "assemble_wandering_model",
    "build_denjoy",
    "certify",
    "check_containment",
    "codimension_at",
    "hopf_map",
    "invariant_circle",
    "make_tubes",
    "ns_scan",
    "rotation_number",
    "tangency_order",
    "verify_wandering",
]
