"""Motion of Julia-set points under changes of the sequence.

Two independent continuations are provided. Shadowing pulls a long forward
orbit of the base sequence back under the moved sequence, always choosing the
preimage in a small disc around the base orbit. Ray-landing motion traces the
same external angles for the moved sequence. For hyperbolic sequences both
give the same point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from iterjulia.exceptions import (
    AmbiguousPreimage,
    CoLandingBroken,
    ExpansionLost,
    NoPreimageInDisc,
    PathNotContinuable,
)
from iterjulia.hyperbolicity import HyperbolicityCert
from iterjulia.polyseq import SequenceSpec, SlotOverride
from iterjulia.rays import co_landing_point
from iterjulia.utils import Turns, pretty_angle


logger = logging.getLogger(__name__)

#: Maximal number of nested bisections of one path segment
MAX_BISECTIONS = 12

#: Every block of N0 steps of a shadow orbit must expand by more than this
MIN_BLOCK_EXPANSION = 1.0

Slot = Tuple[int, int]


@dataclass(frozen=True)
class ParamPath:
    """A path through a finite-dimensional slice of sequences.

    Waypoint ``i`` replaces coefficient ``n`` of ``P_m`` by
    ``waypoints[i][j]`` for ``slots[j] = (m, n)``; everything else comes from
    *base*. Fractional positions interpolate linearly between waypoints.
    """

    base: SequenceSpec
    slots: Tuple[Slot, ...]
    waypoints: Tuple[Tuple[complex, ...], ...]
    max_step: float = math.inf

    def __post_init__(self):
        slots = tuple((int(m), int(n)) for m, n in self.slots)
        waypoints = tuple(tuple(complex(v) for v in w) for w in self.waypoints)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "waypoints", waypoints)
        if not waypoints:
            raise ValueError("A path needs at least one waypoint")
        if any(len(w) != len(slots) for w in waypoints):
            raise ValueError("Every waypoint needs one value per slot")
        for i in range(len(waypoints) - 1):
            step = max((abs(a - b) for a, b in zip(waypoints[i], waypoints[i + 1])),
                       default=0.0)
            if step > self.max_step:
                raise ValueError(f"Waypoints {i} and {i + 1} differ by {step:.3g} "
                                 f"> max_step {self.max_step:.3g}")
        times = sorted({m for m, _ in slots})
        for i in range(len(waypoints)):
            spec = self.spec_at(i)
            for m in times:
                spec.polynomial(m)

    @classmethod
    def straight(cls, base: SequenceSpec, slots: Sequence[Slot], start, end,
                 steps: int = 1, max_step: float = math.inf) -> ParamPath:
        """Segment from *start* to *end* with *steps* equal pieces."""
        start = np.asarray(start, dtype=complex)
        end = np.asarray(end, dtype=complex)
        waypoints = [tuple(start + (end - start) * k / steps) for k in range(steps + 1)]
        return cls(base, tuple(slots), tuple(waypoints), max_step)

    @classmethod
    def tail(cls, base: SequenceSpec, target: SequenceSpec, horizon: int,
             steps: int = 1, max_step: float = math.inf) -> ParamPath:
        """Move every polynomial up to *horizon* from *base* towards *target*.

        Polynomials after *horizon* stay those of *base*. Both sequences must
        have the same degrees up to the horizon.
        """
        slots, start, end = [], [], []
        for m in range(1, horizon + 1):
            p0, p1 = base.polynomial(m), target.polynomial(m)
            if p0.degree != p1.degree:
                raise ValueError(f"Degrees differ at P_{m}")
            for n, (a, b) in enumerate(zip(p0.coeffs, p1.coeffs)):
                if a != b:
                    slots.append((m, n))
                    start.append(a)
                    end.append(b)
        return cls.straight(base, slots, start, end, steps, max_step)

    @property
    def segments(self) -> int:
        return len(self.waypoints) - 1

    def vector_at(self, s: float) -> Tuple[complex, ...]:
        """Slot values at position *s* in ``[0, segments]``."""
        if not 0 <= s <= self.segments:
            raise ValueError(f"Position {s} outside the path")
        i = min(int(math.floor(s)), max(self.segments - 1, 0))
        frac = s - i
        if frac == 0:
            return self.waypoints[i]
        a, b = self.waypoints[i], self.waypoints[i + 1]
        return tuple(x + (y - x) * frac for x, y in zip(a, b))

    def spec_at(self, s: float) -> SequenceSpec:
        rule = SlotOverride(self.base.rule, tuple(zip(self.slots, self.vector_at(s))))
        return SequenceSpec(rule, self.base.bounds)


@dataclass
class PathContinuation:
    """Result of :func:`continue_along_path`."""

    point: complex
    #: Shadow orbit at the end of the path, times m .. m + K
    orbit: np.ndarray = field(repr=False)
    subdivisions: int
    depth: int


@dataclass(frozen=True)
class MotionPair:
    base: complex
    shadowed: complex
    landed: complex
    discrepancy: float


@dataclass
class MotionReport:
    """Shadowing and ray-landing motion of points along a path."""

    pairs: List[MotionPair]
    path: ParamPath
    depth: int
    subdivisions: int

    @property
    def max_discrepancy(self) -> float:
        return max((p.discrepancy for p in self.pairs), default=0.0)


def _forward_orbit(spec: SequenceSpec, m: int, z: complex, steps: int) -> np.ndarray:
    orbit = np.empty(steps + 1, dtype=complex)
    orbit[0] = z
    for j in range(1, steps + 1):
        orbit[j] = spec.polynomial(m + j)(orbit[j - 1])
    return orbit


def _pull_back(
    spec: SequenceSpec, m: int, reference: np.ndarray, terminal: complex,
    radius: float, N0: int,
) -> np.ndarray:
    """Pull *terminal* back along *reference* under *spec*.

    :raises NoPreimageInDisc: No preimage within *radius* of the reference.
    :raises AmbiguousPreimage: Several preimages within *radius*.
    :raises ExpansionLost: A block of N0 steps does not expand.
    """
    K = len(reference) - 1
    orbit = np.empty(K + 1, dtype=complex)
    orbit[K] = terminal
    logs = np.empty(K)
    for j in range(K, 0, -1):
        k = m + j
        poly = spec.polynomial(k)
        coeffs = np.array(poly.coeffs)
        coeffs[0] -= orbit[j]
        roots = np.polynomial.polynomial.polyroots(coeffs)
        dist = np.abs(roots - reference[j - 1])
        inside = dist < radius
        if not inside.any():
            raise NoPreimageInDisc(k, radius, float(dist.min()))
        if inside.sum() > 1:
            raise AmbiguousPreimage(k, radius)
        root = complex(roots[inside][0])
        for _ in range(2):
            slope = poly.derivative(root)
            if slope == 0:
                break
            root -= (poly(root) - orbit[j]) / slope
        orbit[j - 1] = root
        logs[j - 1] = math.log(abs(poly.derivative(root)) or 1e-300)
    for start in range(0, K - N0 + 1, N0):
        factor = math.exp(logs[start:start + N0].sum())
        if factor <= MIN_BLOCK_EXPANSION:
            raise ExpansionLost(m + start, factor)
    return orbit


def _check_cert(cert: HyperbolicityCert) -> int:
    if cert.N0 is None or not cert.delta > 0:
        raise ValueError(f"Shadowing needs a certificate with a doubling time "
                         f"and positive postcritical distance ({cert.verdict})")
    return cert.N0


def shadow_orbit(
    spec0: SequenceSpec, spec1: SequenceSpec, m: int, z: complex, depth: int,
    cert: HyperbolicityCert,
) -> np.ndarray:
    """Shadow orbit of *z* for *spec1*, times ``m .. m + depth * N0``.

    The spec0 orbit of *z* is computed up to ``m + depth * N0``; its end
    point is pulled back under spec1, each time picking the unique preimage
    within ``cert.shadow_radius`` of the spec0 orbit.
    """
    N0 = _check_cert(cert)
    reference = _forward_orbit(spec0, m, z, depth * N0)
    if spec1 == spec0:
        return reference
    return _pull_back(spec1, m, reference, reference[-1], cert.shadow_radius, N0)


def shadow_conjugate(
    spec0: SequenceSpec, spec1: SequenceSpec, m: int, z: complex, depth: int,
    cert: HyperbolicityCert,
) -> complex:
    """Point of ``J_m`` for *spec1* corresponding to *z* for *spec0*.

    Successive depths differ by about ``C' 2^-depth``.

    :param cert: Certificate of *spec0*; its ``N0`` and ``delta`` are used.
    """
    return complex(shadow_orbit(spec0, spec1, m, z, depth, cert)[0])


def move_points(
    spec0: SequenceSpec, spec1: SequenceSpec, m: int, points: Iterable[complex],
    depth: int, cert: HyperbolicityCert,
) -> np.ndarray:
    """:func:`shadow_conjugate` applied to each of *points*."""
    return np.array([shadow_conjugate(spec0, spec1, m, z, depth, cert) for z in points])


def continue_along_path(
    path: ParamPath, m: int, z: complex, depth: int, cert: HyperbolicityCert
) -> PathContinuation:
    """Carry *z* from the first waypoint of *path* to the last one.

    The whole shadow orbit is moved from waypoint to waypoint, always pulling
    back the same terminal point; a segment that fails is bisected, down to
    :data:`MAX_BISECTIONS` levels.

    :raises PathNotContinuable: If a segment still fails at the deepest level.
    """
    N0 = _check_cert(cert)
    radius = cert.shadow_radius
    reference = _forward_orbit(path.spec_at(0), m, z, depth * N0)
    terminal = reference[-1]
    subdivisions = 0

    def walk(s0: float, s1: float, orbit: np.ndarray, level: int, segment: int):
        nonlocal subdivisions
        try:
            return _pull_back(path.spec_at(s1), m, orbit, terminal, radius, N0)
        except (AmbiguousPreimage, NoPreimageInDisc, ExpansionLost) as exc:
            if level >= MAX_BISECTIONS:
                raise PathNotContinuable(segment, level, exc) from exc
            logger.debug("Segment %d: bisecting [%.6g, %.6g] after %s", segment, s0, s1, exc)
            subdivisions += 1
            mid = 0.5 * (s0 + s1)
            half = walk(s0, mid, orbit, level + 1, segment)
            return walk(mid, s1, half, level + 1, segment)

    orbit = reference
    for i in range(path.segments):
        if path.waypoints[i] == path.waypoints[i + 1]:
            continue
        orbit = walk(float(i), float(i + 1), orbit, 0, i)
    logger.info("Continued %s along %d segments with %d subdivisions",
                z, path.segments, subdivisions)
    return PathContinuation(complex(orbit[0]), orbit, subdivisions, depth)


def ray_landing_motion(
    spec0: SequenceSpec, spec1: SequenceSpec, m: int, angles: Sequence[Turns],
    tol: float = 1e-6, **trace_options,
) -> complex:
    """Common landing point for *spec1* of rays that co-land for *spec0*.

    :raises ValueError: If the rays do not co-land for *spec0*.
    :raises CoLandingBroken: With the pairs of angles that separated for *spec1*.
    """
    try:
        base = co_landing_point(spec0, m, angles, tol, **trace_options)
    except CoLandingBroken as exc:
        raise ValueError(f"Angles {', '.join(pretty_angle(a) for a in angles)} "
                         f"do not co-land for the base sequence ({exc})") from exc
    if spec1 == spec0:
        return base.landing
    return co_landing_point(spec1, m, angles, tol, **trace_options).landing


def compare_motions(
    path: ParamPath, m: int, angle_sets: Sequence[Sequence[Turns]], depth: int,
    cert: HyperbolicityCert, tol: float = 1e-6, **trace_options,
) -> MotionReport:
    """Move the landing point of each angle set along *path* both ways."""
    spec0 = path.spec_at(0)
    spec1 = path.spec_at(path.segments)
    pairs = []
    subdivisions = 0
    for angles in angle_sets:
        base = co_landing_point(spec0, m, angles, tol, **trace_options).landing
        moved = continue_along_path(path, m, base, depth, cert)
        landed = co_landing_point(spec1, m, angles, tol, **trace_options).landing
        subdivisions += moved.subdivisions
        pairs.append(MotionPair(base, moved.point, landed, abs(moved.point - landed)))
    report = MotionReport(pairs, path, depth, subdivisions)
    logger.info("Motion report: %d pairs, largest discrepancy %.3g",
                len(pairs), report.max_discrepancy)
    return report


def _xy(points) -> np.ndarray:
    points = np.asarray(points, dtype=complex).ravel()
    return np.column_stack([points.real, points.imag])


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two finite point clouds."""
    a, b = _xy(A), _xy(B)
    if not len(a) or not len(b):
        raise ValueError("Hausdorff distance needs two nonempty point clouds")
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def injectivity_gap(points) -> float:
    """Smallest distance between two of *points*."""
    xy = _xy(points)
    if len(xy) < 2:
        raise ValueError("Need at least two points")
    dist, _ = cKDTree(xy).query(xy, k=2)
    return float(dist[:, 1].min())


def holomorphy_defect(
    base: SequenceSpec, slot: Slot, value: complex, m: int, z: complex, depth: int,
    cert: HyperbolicityCert, h: float = 1e-4,
) -> float:
    """Relative Cauchy-Riemann defect of the motion of *z* in one slot.

    The slot of *base* is set to ``value +- h`` and ``value +- ih``; the
    motion is holomorphic when ``d/dy = i d/dx``.
    """
    def tau(lam: complex) -> complex:
        spec = SequenceSpec(SlotOverride(base.rule, ((slot, lam),)), base.bounds)
        return shadow_conjugate(base, spec, m, z, depth, cert)

    value = complex(value)
    dx = (tau(value + h) - tau(value - h)) / (2 * h)
    dy = (tau(value + 1j * h) - tau(value - 1j * h)) / (2 * h)
    scale = max(abs(dx), abs(dy))
    if scale == 0:
        return 0.0
    return abs(dy - 1j * dx) / scale
