"""External rays: tracing, landing, co-landing groups and tail lengths."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from iterjulia.exceptions import CoLandingBroken, UnlandedRay
from iterjulia.polyseq import SequenceSpec, escape_radius
from iterjulia.potential import DEFAULT_HORIZON, RayFollower, RayPoint
from iterjulia.utils import Turns, as_turns, pretty_angle, same_kind


logger = logging.getLogger(__name__)

#: Default ratio between consecutive potentials
SHRINK = 0.65

#: Default smallest potential traced
T_MIN = 1e-5

#: Default Newton tolerance (relative step size)
SOLVER_TOL = 1e-10

#: Number of trailing gaps used to estimate the landing tail
TAIL_GAPS = 5


class RayStatus(Enum):
    LANDED = "Landed"
    TRUNCATED = "Truncated"
    DIVERGED = "Diverged"

    def __str__(self):
        return self.value


@dataclass
class RayTrace:
    """Polyline approximating the external ray of angle *theta* at time *m*."""

    m: int
    theta: Turns
    points: List[RayPoint] = field(default_factory=list)
    landing: Optional[complex] = None
    #: Estimated distance from the last point to the landing point
    landing_radius: float = math.inf
    status: RayStatus = RayStatus.TRUNCATED
    shrink: float = SHRINK
    subdivisions: int = 0

    @property
    def potentials(self) -> np.ndarray:
        return np.array([p.potential for p in self.points])

    @property
    def zs(self) -> np.ndarray:
        return np.array([p.z for p in self.points])

    @property
    def endpoint(self) -> Optional[complex]:
        """Landing estimate if there is one, else the last traced point."""
        if self.landing is not None:
            return self.landing
        return self.points[-1].z if self.points else None

    def __str__(self):
        return f"Ray {pretty_angle(self.theta)} at time {self.m}: {self.status}"


def _estimate_landing(trace: RayTrace, t_min: float, resolution: Optional[float] = None):
    """Extrapolate the tail as a complex geometric series of the last steps.

    A trace whose last step stayed within the solver *resolution* has
    converged as far as it can: it lands at its last point.
    """
    zs = trace.zs
    if resolution is not None:
        trace.landing = complex(zs[-1])
        trace.landing_radius = resolution
        trace.status = RayStatus.LANDED
        return
    if len(zs) < 3:
        return
    gaps = np.diff(zs)[-TAIL_GAPS:]
    if np.any(gaps[:-1] == 0):
        trace.landing = complex(zs[-1])
        trace.landing_radius = 0.0
        trace.status = RayStatus.LANDED
        return
    ratios = gaps[1:] / gaps[:-1]
    worst = float(np.max(np.abs(ratios)))
    r = complex(ratios[-1])
    last = complex(gaps[-1])
    if worst >= 1 or abs(r) >= 1:
        logger.warning("Ray %s has no converging tail (ratio %.3g)",
                       pretty_angle(trace.theta), worst)
        return
    trace.landing = complex(zs[-1]) + last * r / (1 - r)
    trace.landing_radius = abs(last) * worst / (1 - worst)
    if trace.points[-1].potential <= t_min * (1 + 1e-12):
        trace.status = RayStatus.LANDED


def trace_ray(
    spec: SequenceSpec,
    m: int,
    theta: Turns,
    t_start: Optional[float] = None,
    t_min: float = T_MIN,
    shrink: float = SHRINK,
    tol: float = SOLVER_TOL,
    horizon: int = DEFAULT_HORIZON,
) -> RayTrace:
    """Trace the external ray of angle *theta* (in turns) at time *m*.

    Potentials follow ``t_k = t_start * shrink^k`` until the first one at or
    below *t_min*; each point is Newton-corrected from a first-order
    predictor. The schedule stays exactly geometric, also in the last step,
    and the landing point is extrapolated from the decay of the last steps.
    Tracing stops early, as landed, once a step no longer moves the point
    by more than the Newton tolerance.

    :param t_start:
        Starting potential, at least ``log(2 R0)``. Defaults to ``log(4 R0)``.
    """
    if not 0 < shrink < 1:
        raise ValueError(f"shrink must be in (0, 1), got {shrink}")
    R0 = escape_radius(spec.bounds)
    if t_start is None:
        t_start = math.log(4 * R0)
    elif t_start < math.log(2 * R0) * (1 - 1e-12):
        raise ValueError(f"t_start must be at least log(2 R0) = {math.log(2 * R0):.6g}")
    if not 0 < t_min < t_start:
        raise ValueError("Need 0 < t_min < t_start")

    trace = RayTrace(m, theta, shrink=shrink)
    follower = RayFollower(spec, m, theta, horizon, tol)
    point = follower.start(t_start)
    if point is None:
        trace.status = RayStatus.DIVERGED
        logger.warning("%s", trace)
        return trace
    trace.points.append(point)
    k = 0
    while point.potential > t_min:
        k += 1
        point = follower.advance(point, t_start * shrink ** k)
        if point is None:
            trace.status = RayStatus.DIVERGED
            break
        trace.points.append(point)
        if follower.resolved:
            logger.debug("%s converged to solver resolution at t=%.3g",
                         trace, point.potential)
            break
    trace.subdivisions = follower.subdivisions
    if trace.status is not RayStatus.DIVERGED:
        resolution = tol * max(1.0, abs(point.z)) if follower.resolved else None
        _estimate_landing(trace, t_min, resolution)
    if trace.status is RayStatus.LANDED:
        logger.info("%s at %s (radius %.2g)", trace, trace.landing, trace.landing_radius)
    else:
        logger.warning("%s after %d points", trace, len(trace.points))
    return trace


def pushforward_angle(spec: SequenceSpec, m: int, n: int, theta: Turns) -> Turns:
    """Return ``D_{m,n} theta mod 1``, exactly for fractions."""
    if m > n:
        raise ValueError(f"Need m <= n, got m={m}, n={n}")
    angle = as_turns(theta)
    for d in spec.degrees(m, n):
        angle = (d * angle) % 1
    return same_kind(angle, theta)


def ray_tail_length(trace: RayTrace, from_potential: float) -> float:
    """Length of the traced ray below *from_potential*.

    Sums the polyline gaps between points with potential at most
    *from_potential* and adds the landing radius for a landed ray.
    """
    limit = from_potential * (1 + 1e-12)
    zs = [p.z for p in trace.points if p.potential <= limit]
    length = float(np.sum(np.abs(np.diff(zs)))) if len(zs) > 1 else 0.0
    if trace.status is RayStatus.LANDED:
        length += trace.landing_radius
    return length


@dataclass(frozen=True)
class LandingFit:
    """Upper bound ``length <= C t^alpha`` fitted on a trace."""

    C: float
    alpha: float
    #: (potential, tail length) pairs used
    samples: Tuple[Tuple[float, float], ...]

    def bound(self, t: float) -> float:
        return self.C * t ** self.alpha


def landing_fit(trace: RayTrace, t_lo: float = 1e-4, t_hi: float = 1e-1) -> LandingFit:
    """Fit the exponent of the tail-length law on potentials in ``[t_lo, t_hi]``.

    ``log C`` is moved up after the least-squares fit so that the bound holds
    on every sample.
    """
    samples = []
    for p in trace.points:
        if t_lo <= p.potential <= t_hi:
            length = ray_tail_length(trace, p.potential)
            if length > 0:
                samples.append((p.potential, length))
    if len(samples) < 2:
        raise ValueError("Not enough traced points in the potential window")
    logt = np.log([s[0] for s in samples])
    logl = np.log([s[1] for s in samples])
    alpha, log_c = np.polyfit(logt, logl, 1)
    log_c += max(0.0, float(np.max(logl - (alpha * logt + log_c))))
    return LandingFit(math.exp(log_c), float(alpha), tuple(samples))


@dataclass(frozen=True)
class LandingGroup:
    """Angles whose rays land at one point."""

    angles: Tuple[Turns, ...]
    landing: complex
    radius: float


def group_landings(traces: Sequence[RayTrace], tol: float) -> List[LandingGroup]:
    """Single-linkage clustering of landed traces with a diameter guard.

    :raises UnlandedRay: If any trace has not landed.
    """
    unlanded = [t.theta for t in traces if t.status is not RayStatus.LANDED]
    if unlanded:
        raise UnlandedRay(pretty_angle(a) for a in unlanded)
    count = len(traces)
    parent = list(range(count))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(count):
        for j in range(i + 1, count):
            a, b = traces[i], traces[j]
            if abs(a.landing - b.landing) <= tol + a.landing_radius + b.landing_radius:
                parent[find(i)] = find(j)

    clusters = {}
    for i in range(count):
        clusters.setdefault(find(i), []).append(traces[i])

    groups = []
    for members in clusters.values():
        diameter = max(abs(a.landing - b.landing) for a in members for b in members)
        if diameter > 3 * tol + 2 * max(t.landing_radius for t in members):
            logger.warning("Chained cluster of %d rays with diameter %.3g; splitting",
                           len(members), diameter)
            parts: List[List[RayTrace]] = []
            for t in members:
                for part in parts:
                    if all(abs(t.landing - o.landing) <= tol + t.landing_radius
                           + o.landing_radius for o in part):
                        part.append(t)
                        break
                else:
                    parts.append([t])
        else:
            parts = [members]
        for part in parts:
            landing = complex(np.mean([t.landing for t in part]))
            radius = max(t.landing_radius for t in part)
            groups.append(LandingGroup(tuple(t.theta for t in part), landing, radius))
    groups.sort(key=lambda g: float(as_turns(g.angles[0])))
    return groups


def co_landing_groups(
    spec: SequenceSpec, m: int, angles: Iterable[Turns], tol: float = 1e-6, **trace_options
) -> List[LandingGroup]:
    """Partition *angles* by the landing points of their rays.

    Extra keyword arguments go to :func:`trace_ray`.

    :raises UnlandedRay: If some ray does not reach the Landed status.
    """
    traces = [trace_ray(spec, m, a, **trace_options) for a in angles]
    return group_landings(traces, tol)


def co_landing_point(
    spec: SequenceSpec, m: int, angles: Iterable[Turns], tol: float = 1e-6, **trace_options
) -> LandingGroup:
    """The single landing point of the rays of *angles*.

    :raises UnlandedRay: If some ray does not reach the Landed status.
    :raises CoLandingBroken:
        If the rays land at more than one point, with every pair of angles
        from different groups.
    """
    traces = [trace_ray(spec, m, a, **trace_options) for a in angles]
    groups = group_landings(traces, tol)
    if len(groups) == 1:
        return groups[0]
    member = {}
    for index, group in enumerate(groups):
        for angle in group.angles:
            member[angle] = index
    broken = []
    for i, a in enumerate(traces):
        for b in traces[i + 1:]:
            if member[a.theta] != member[b.theta]:
                broken.append((pretty_angle(a.theta), pretty_angle(b.theta),
                               abs(a.landing - b.landing)))
    raise CoLandingBroken(broken)


@dataclass(frozen=True)
class PortraitCheck:
    """Which sampled angles land with a base group."""

    group: LandingGroup
    #: Sampled angles outside the group whose rays land at the same point
    joined: Tuple[Turns, ...]
    #: Sampled angles whose rays could not be traced
    unresolved: Tuple[Turns, ...]
    sampled: int

    @property
    def closed(self) -> bool:
        """No other sampled ray lands at the group's point."""
        return not self.joined and not self.unresolved


def sample_angles(denominators: Iterable[int]) -> List[Fraction]:
    """All angles ``k/q`` in [0, 1) for the given denominators."""
    found = set()
    for q in denominators:
        found.update(Fraction(k, q) for k in range(q))
    return sorted(found)


def portrait(
    spec: SequenceSpec,
    m: int,
    angles: Iterable[Turns],
    denominators: Iterable[int] = (7,),
    tol: float = 1e-6,
    **trace_options,
) -> PortraitCheck:
    """Check that no sampled ray other than *angles* lands at their point.

    *angles* must co-land. The sampled set is every ``k/q`` for ``q`` in
    *denominators*; only this finite set is checked.

    :raises UnlandedRay: If a ray of *angles* does not land.
    :raises CoLandingBroken: If the rays of *angles* land apart.
    """
    base = [as_turns(a) for a in angles]
    group = co_landing_point(spec, m, base, tol, **trace_options)
    joined, unresolved = [], []
    members = set(base)
    candidates = [a for a in sample_angles(denominators) if a not in members]
    for angle in candidates:
        trace = trace_ray(spec, m, angle, **trace_options)
        end = trace.endpoint
        if trace.status is RayStatus.DIVERGED or end is None:
            unresolved.append(angle)
            continue
        radius = trace.landing_radius if trace.landing is not None else 0.0
        if abs(end - group.landing) <= tol + group.radius + radius:
            joined.append(angle)
    logger.info("Portrait of %s: %d sampled, %d joined, %d unresolved",
                ", ".join(pretty_angle(a) for a in base), len(candidates),
                len(joined), len(unresolved))
    return PortraitCheck(group, tuple(joined), tuple(unresolved), len(candidates))
