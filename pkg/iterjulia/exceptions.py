"""Failures raised by the numerical kernels.

Outcomes that are answers rather than failures (an orbit that stays bounded,
a ray that diverges) are returned as values and are not listed here.
"""

from typing import Iterable, Optional, Sequence


class DynamicsError(Exception):
    """Base class for all numerical failures of this package."""


class BoundsViolation(DynamicsError):
    """A polynomial falls outside the declared (d, K, M) bounds."""

    def __init__(self, m: int, reason: str):
        #: Time index of the offending polynomial
        self.m = m
        self.reason = reason

    def __str__(self):
        return f"P_{self.m} violates bounds: {self.reason}"


class BranchObstruction(DynamicsError):
    """Leading coefficients surround the origin; no ray from 0 is avoided."""

    def __init__(self, horizon: int, clearance: float):
        self.horizon = horizon
        #: Best angular clearance found, in degrees
        self.clearance = clearance

    def __str__(self):
        return (f"No avoided ray for leading coefficients up to index "
                f"{self.horizon} (best clearance {self.clearance:.3g} deg)")


class IndexBeyondHorizon(DynamicsError):
    """A conjugacy was asked for an index it was not computed for."""

    def __init__(self, m: int, limit: int):
        self.m = m
        self.limit = limit

    def __str__(self):
        return f"Index {self.m} is beyond the conjugacy range 0..{self.limit}"


class BranchLoss(DynamicsError):
    """Continuation from the principal branch could not be completed."""

    def __init__(self, z: complex, potential: float):
        self.z = z
        self.potential = potential

    def __str__(self):
        return (f"Lost the root branch continuing from {self.z:.6g} "
                f"at potential {self.potential:.3g}")


class ContinuationStall(DynamicsError):
    """Newton continuation of the inverse Böttcher map did not converge."""

    def __init__(self, w: complex, potential: float):
        self.w = w
        self.potential = potential

    def __str__(self):
        return (f"Continuation towards w={self.w:.6g} stalled at "
                f"potential {self.potential:.3g}")


class UnlandedRay(DynamicsError):
    """Some rays did not reach the Landed status."""

    def __init__(self, angles: Iterable):
        self.angles = list(angles)

    def __str__(self):
        listed = ", ".join(str(a) for a in self.angles)
        return f"Rays did not land: {listed}"


class SamplingFailed(DynamicsError):
    """A Julia set could not be sampled.

    *failed* of *total* samples were lost: diverged rays for ray sampling,
    escaping grid points for bisection sampling.
    """

    def __init__(self, failed: int, total: int, method: str = "rays"):
        self.failed = failed
        self.total = total
        self.method = method

    def __str__(self):
        if self.method == "bisection":
            return f"All {self.total} grid points escaped, no bounded point to refine"
        return f"{self.failed} of {self.total} rays diverged"


class AmbiguousPreimage(DynamicsError):
    """Two preimages fall inside the shadowing disc."""

    def __init__(self, n: int, radius: float):
        self.n = n
        self.radius = radius

    def __str__(self):
        return (f"More than one preimage under P_{self.n} within "
                f"{self.radius:.3g} of the reference orbit")


class NoPreimageInDisc(DynamicsError):
    """No preimage falls inside the shadowing disc."""

    def __init__(self, n: int, radius: float, nearest: float):
        self.n = n
        self.radius = radius
        self.nearest = nearest

    def __str__(self):
        return (f"No preimage under P_{self.n} within {self.radius:.3g} "
                f"of the reference orbit (nearest at {self.nearest:.3g})")


class PathNotContinuable(DynamicsError):
    """Shadowing along a parameter path failed after maximal bisection."""

    def __init__(self, segment: int, level: int, cause: Optional[Exception] = None):
        self.segment = segment
        self.level = level
        self.cause = cause

    def __str__(self):
        text = (f"Path segment {self.segment} not continuable after "
                f"{self.level} bisections")
        if self.cause is not None:
            text += f" ({self.cause})"
        return text


class CoLandingBroken(DynamicsError):
    """Angles that co-land for the base sequence no longer co-land."""

    def __init__(self, pairs: Sequence):
        #: List of (angle, angle, distance) triples that separated
        self.pairs = list(pairs)

    def __str__(self):
        listed = "; ".join(f"{a}~{b}: {dist:.3g}" for a, b, dist in self.pairs)
        return f"Co-landing broken: {listed}"


class TimeMismatch(DynamicsError):
    """A ray trace does not belong to the raster's time index."""

    def __init__(self, expected: int, found: int):
        self.expected = expected
        self.found = found

    def __str__(self):
        return f"Trace at time {self.found} cannot overlay raster at time {self.expected}"


class ExpansionLost(DynamicsError):
    """A shadow orbit no longer expands over a doubling-time block."""

    def __init__(self, n: int, factor: float):
        #: Time index where the failing block starts
        self.n = n
        self.factor = factor

    def __str__(self):
        return (f"Shadow orbit block starting at time {self.n} expands by "
                f"{self.factor:.4g} only")
