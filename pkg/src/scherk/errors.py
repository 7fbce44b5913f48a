"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`ScherkError`,
and carries a ``stage`` attribute so pipeline drivers can report where it came
from.
"""


class ScherkError(Exception):
    stage = None

    def tagged(self, stage):
        self.stage = stage
        return self

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


# complex_contour
class PoleHit(ScherkError):
    pass


class ClearanceViolation(ScherkError):
    def __init__(self, singularity, segment, distance, clearance):
        self.singularity = singularity
        self.segment = segment
        self.distance = distance
        super().__init__(
            f"segment {segment} passes within {distance:.3e} of singularity "
            f"{singularity!r} (clearance {clearance:.3e})")


class BranchAmbiguity(ScherkError):
    pass


class ToleranceNotMet(ScherkError):
    def __init__(self, value, error, tol):
        self.value = value
        self.error = error
        super().__init__(f"quadrature error estimate {error:.3e} exceeds tol {tol:.3e}")


# weierstrass_families
class InvalidOrdering(ScherkError):
    pass


class NoRealRoots(ScherkError):
    pass


class OrderingViolated(ScherkError):
    pass


class DegenerateDenominator(ScherkError):
    pass


class NoAdmissibleRoot(ScherkError):
    pass


# period_engine
class NotIsolated(ScherkError):
    pass


class PathDegenerate(ScherkError):
    pass


# param_solvers
class SameSign(ScherkError):
    pass


class MaxIterations(ScherkError):
    pass


class ZeroOnBoundary(ScherkError):
    pass


class WindingLost(ScherkError):
    def __init__(self, msg, samples=None):
        self.samples = samples
        super().__init__(msg)


# plateau_graph
class NoConvergence(ScherkError):
    def __init__(self, msg, history=()):
        self.history = list(history)
        super().__init__(msg)


class BandEmpty(ScherkError):
    pass


# mesh_builder
class ResolutionTooCoarse(ScherkError):
    pass


class ClosureDefect(ScherkError):
    def __init__(self, msg, worst_edges=()):
        self.worst_edges = list(worst_edges)
        super().__init__(msg)


class WeldMismatch(ScherkError):
    def __init__(self, msg, gap=None):
        self.gap = gap
        super().__init__(msg)


# cli
class ConfigError(ScherkError):
    pass
