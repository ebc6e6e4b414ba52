"""Exception hierarchy shared by all wanderlab modules."""
from __future__ import annotations


class WanderlabError(Exception):
    """Base class for every error raised by the package."""


class DomainEscape(WanderlabError):
    def __init__(self, k: int, point=None):
        self.k = k
        self.point = point
        super().__init__(f"iterate {k} left the map domain (point {point})")


class InverseDivergence(WanderlabError):
    pass


class NoConvergence(WanderlabError):
    pass


class SingularJacobian(WanderlabError):
    pass


class NonHyperbolic(WanderlabError):
    pass


class NotDiffeomorphism(WanderlabError):
    pass


class OverlapError(WanderlabError):
    pass


class MarkerMismatch(WanderlabError):
    pass


class SpectralGapMissing(WanderlabError):
    pass


class MeshBlowup(WanderlabError):
    pass


class MeshTooCoarse(WanderlabError):
    pass


class NoIntersection(WanderlabError):
    pass


class AmbiguousIntersection(WanderlabError):
    pass


class NoTangency(WanderlabError):
    pass


class NoTangencyCandidate(WanderlabError):
    pass


class HorizonExhausted(WanderlabError):
    def __init__(self, best_n: int, best_angle: float):
        self.best_n = best_n
        self.best_angle = best_angle
        super().__init__(f"no alignment within horizon; best angle {best_angle:.3g} at n={best_n}")


class RationalRotation(WanderlabError):
    """Raised when a rotation parameter fails the irrationality check."""


class NewtonDivergence(WanderlabError):
    pass


class NotBorn(WanderlabError):
    pass


class NoCrossing(WanderlabError):
    pass


class IllConditioned(WanderlabError):
    pass


class InfeasibleRatios(WanderlabError):
    pass


class MassOverflow(WanderlabError):
    pass


class NonMonotoneLift(WanderlabError):
    pass


class DeltaTooLarge(WanderlabError):
    def __init__(self, delta: float, delta_max: float):
        self.delta = delta
        self.delta_max = delta_max
        super().__init__(f"delta={delta:.6g} exceeds admissible maximum {delta_max:.6g}")


class HorizonBeyondTable(WanderlabError):
    pass


class ConfigError(WanderlabError):
    pass
