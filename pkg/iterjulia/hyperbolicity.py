"""Heuristic hyperbolicity certificates.

A certificate combines three finite-horizon estimates on sampled iterated
Julia sets: the postcritical distance, the expansion constants ``(C, mu)``
of ``|Q'_{m,m+i}| >= C mu^i``, and the doubling time ``N0``. The infima in
the definitions range over all times; a certificate only covers the horizons
it records, so it is evidence, not a proof.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from iterjulia.exceptions import SamplingFailed
from iterjulia.polyseq import SequenceSpec, escape_radius, escape_times, log_derivatives
from iterjulia.rays import RayStatus, trace_ray


logger = logging.getLogger(__name__)

#: Highest degree whose critical points are computed
MAX_CRITICAL_DEGREE = 5

#: Residual a polished critical point must reach
CRITICAL_TOL = 1e-12

#: Bisection samples are refined to this segment length
BISECTION_TOL = 1e-9

#: Fraction of diverged rays tolerated by ray sampling
MAX_DIVERGED = 0.05

#: Relative slack when comparing sampled derivatives with 2
DOUBLING_SLACK = 1e-6

#: Shadowing discs have radius ``SHADOW_DISC * delta``
SHADOW_DISC = 0.25

#: Postcritical distances at or below this are logged as near zero
NEAR_ZERO_DISTANCE = 0.02

#: Critical orbits of constant sequences are followed this far
CONSTANT_ORBIT_HORIZON = 128


@dataclass(frozen=True)
class RayLandings:
    """Landing points of equally spaced external rays."""

    count: int


@dataclass(frozen=True)
class Bisection:
    """Boundary crossings of a square grid, refined by bisection."""

    grid: int
    horizon: int


@dataclass(eq=False)
class JuliaSample:
    """Sampled points of the iterated Julia set ``J_m``."""

    m: int
    points: np.ndarray
    method: Union[RayLandings, Bisection]
    #: Largest distance from a point to its nearest neighbour
    quality: float

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class CertifyConfig:
    """Horizons and thresholds of :func:`certify`."""

    m_max: int = 8
    n_max: int = 24
    i_max: int = 12
    n0_max: int = 32
    delta_min: float = 1e-3
    mu_min: float = 1.02
    #: ``"bisection"`` or ``"rays"``
    method: str = "bisection"
    horizon: int = 512
    grid: int = 129
    #: Number of rays for ray sampling
    count: int = 128


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reason: Optional[str] = None

    def __str__(self):
        return "Pass" if self.passed else f"Fail({self.reason})"


@dataclass(frozen=True)
class HyperbolicityCert:
    """Estimated hyperbolicity constants with the horizons they cover."""

    delta: float
    C: float
    mu: float
    N0: Optional[int]
    #: ``(m_max, n_max, i_max)``
    horizons: Tuple[int, int, int]
    #: Number of sampled points per time
    samples: Dict[int, int]
    verdict: Verdict
    config: CertifyConfig = field(default_factory=CertifyConfig)

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    @property
    def shadow_radius(self) -> float:
        """Radius of the discs used to pick preimages when shadowing."""
        return SHADOW_DISC * self.delta


def _xy(points) -> np.ndarray:
    points = np.asarray(points, dtype=complex).ravel()
    return np.column_stack([points.real, points.imag])


def _nearest_gap(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    dist, _ = cKDTree(_xy(points)).query(_xy(points), k=2)
    return float(dist[:, 1].max())


def critical_points(spec: SequenceSpec, k: int) -> np.ndarray:
    """Critical points of ``P_k``, polished by Newton's method.

    :raises ValueError: If the degree exceeds :data:`MAX_CRITICAL_DEGREE`.
    """
    poly = spec.polynomial(k)
    if poly.degree > MAX_CRITICAL_DEGREE:
        raise ValueError(f"Critical points are computed up to degree "
                         f"{MAX_CRITICAL_DEGREE}, P_{k} has degree {poly.degree}")
    pp = np.polynomial.polynomial
    dcoeffs = poly.derivative_coeffs()
    ddcoeffs = pp.polyder(dcoeffs)
    roots = pp.polyroots(dcoeffs).astype(complex)
    for _ in range(8):
        f = pp.polyval(roots, dcoeffs)
        fp = pp.polyval(roots, ddcoeffs)
        safe = fp != 0
        roots[safe] -= f[safe] / fp[safe]
    residual = float(np.max(np.abs(pp.polyval(roots, dcoeffs)))) if roots.size else 0.0
    if residual > CRITICAL_TOL * max(1.0, float(np.max(np.abs(dcoeffs)))):
        logger.warning("Critical points of P_%d have residual %.3g", k, residual)
    return roots


def _bisection_sample(spec, m, count, horizon, grid, R0) -> JuliaSample:
    n = grid | 1
    xs = np.linspace(-R0, R0, n)
    plane = xs[np.newaxis, :] + 1j * xs[:, np.newaxis]
    bounded = escape_times(spec, m, plane, R0, horizon) < 0
    if not bounded.any():
        raise SamplingFailed(plane.size, plane.size, "bisection")

    # Horizontal and vertical neighbours
    pairs = (
        (plane[:, :-1], plane[:, 1:], bounded[:, :-1], bounded[:, 1:]),
        (plane[:-1, :], plane[1:, :], bounded[:-1, :], bounded[1:, :]),
    )
    inside, outside = [], []
    for a, b, ba, bb in pairs:
        cross = ba != bb
        inside.append(np.where(ba, a, b)[cross])
        outside.append(np.where(ba, b, a)[cross])
    inside = np.concatenate(inside)
    outside = np.concatenate(outside)

    while inside.size and np.max(np.abs(outside - inside)) > BISECTION_TOL:
        mid = 0.5 * (inside + outside)
        escaped = escape_times(spec, m, mid, R0, horizon) >= 0
        outside = np.where(escaped, mid, outside)
        inside = np.where(escaped, inside, mid)

    points = inside
    if count is not None and len(points) > count:
        centre = points.mean()
        order = np.argsort(np.angle(points - centre))
        points = points[order][np.linspace(0, len(points) - 1, count).round().astype(int)]
    return JuliaSample(m, points, Bisection(n, horizon), _nearest_gap(points))


def _ray_sample(spec, m, count, trace_options) -> JuliaSample:
    ends = []
    diverged = 0
    for k in range(count):
        trace = trace_ray(spec, m, Fraction(k, count), **trace_options)
        if trace.status is RayStatus.DIVERGED or trace.endpoint is None:
            diverged += 1
        else:
            ends.append(trace.endpoint)
    if diverged > MAX_DIVERGED * count:
        raise SamplingFailed(diverged, count)
    points = np.array(ends, dtype=complex)
    return JuliaSample(m, points, RayLandings(count), _nearest_gap(points))


def julia_sample(
    spec: SequenceSpec,
    m: int,
    count: Optional[int] = None,
    horizon: int = 512,
    method: str = "bisection",
    grid: int = 129,
    **trace_options,
) -> JuliaSample:
    """Sample the iterated Julia set ``J_m``.

    ``"bisection"`` refines every bounded/escaping neighbour pair of a
    ``grid x grid`` lattice over the escape disc to a segment shorter than
    :data:`BISECTION_TOL` and returns the bounded endpoints, thinned to
    *count* points if given. ``"rays"`` returns the landing points of *count*
    equally spaced external rays (monic sequences only).

    :raises SamplingFailed:
        If no grid point is bounded, or more than 5% of the rays diverge.
    """
    if count is not None and count < 1:
        raise ValueError("count must be >= 1")
    if method == "bisection":
        sample = _bisection_sample(spec, m, count, horizon, grid, escape_radius(spec.bounds))
    elif method == "rays":
        sample = _ray_sample(spec, m, count or 64, trace_options)
    else:
        raise ValueError(f"Unknown sampling method {method!r}")
    logger.debug("Sampled J_%d: %d points, gap %.3g", m, len(sample), sample.quality)
    return sample


def sample_times(
    spec: SequenceSpec, times: Iterable[int], config: CertifyConfig = CertifyConfig()
) -> Dict[int, JuliaSample]:
    """Julia samples for several times, shared for constant sequences."""
    samples = {}
    shared = None
    for m in times:
        if shared is not None:
            samples[m] = JuliaSample(m, shared.points, shared.method, shared.quality)
            continue
        samples[m] = julia_sample(
            spec, m, None if config.method == "bisection" else config.count,
            config.horizon, config.method, config.grid)
        if spec.is_constant():
            shared = samples[m]
    return samples


def postcritical_distance(
    spec: SequenceSpec,
    m_max: int,
    n_max: int,
    samples: Mapping[int, JuliaSample],
    orbit_horizon: int = CONSTANT_ORBIT_HORIZON,
) -> float:
    """Estimate the postcritical distance from samples of ``J_1 .. J_{n_max}``.

    The critical values of ``Q_{m,n}`` are ``Q_{k,n}(P_k(c))`` for critical
    points ``c`` of ``P_k``, ``m < k <= n``; the estimate is their smallest
    distance to the sample at time n, over ``m <= m_max`` and
    ``m < n <= n_max``. Escaped critical values are skipped.

    A constant sequence has a single Julia set, so its critical orbits are
    followed on to *orbit_horizon* against the same sample. This is what
    brings the estimate down near parabolic points, where critical orbits
    creep onto ``J`` like ``1/n``.
    """
    R0 = escape_radius(spec.bounds)
    trees = {n: cKDTree(_xy(samples[n].points)) for n in range(1, n_max + 1)}
    table: Dict[Tuple[int, int], float] = {}
    for k in range(1, n_max + 1):
        values = spec.polynomial(k)(critical_points(spec, k))
        for n in range(k, n_max + 1):
            if n > k:
                values = spec.polynomial(n)(values)
            values = values[np.abs(values) <= R0]
            if values.size:
                table[k, n] = float(trees[n].query(_xy(values))[0].min())
            else:
                table[k, n] = math.inf
    delta = min(
        table[k, n]
        for m in range(0, m_max + 1)
        for n in range(m + 1, n_max + 1)
        for k in range(m + 1, n + 1))
    if spec.is_constant() and orbit_horizon > n_max:
        delta = min(delta, _orbit_tail_distance(spec, trees[n_max], n_max, orbit_horizon, R0))
    if delta <= NEAR_ZERO_DISTANCE:
        logger.warning("Postcritical distance %.3g is near zero", delta)
    return delta


def _orbit_tail_distance(spec, tree, start, stop, R0) -> float:
    values = spec.polynomial(1)(critical_points(spec, 1))
    best = math.inf
    for n in range(2, stop + 1):
        values = spec.polynomial(n)(values)
        values = values[np.abs(values) <= R0]
        if not values.size:
            break
        if n > start:
            best = min(best, float(tree.query(_xy(values))[0].min()))
    return best


def _minimal_log_derivatives(spec, samples: Mapping[int, JuliaSample], steps: int) -> np.ndarray:
    best = np.full(steps, np.inf)
    for m, sample in samples.items():
        if len(sample):
            table = log_derivatives(spec, m, sample.points, steps)
            best = np.minimum(best, table.min(axis=1))
    return best


def expansion_constants(
    spec: SequenceSpec, samples: Mapping[int, JuliaSample], i_max: int
) -> Tuple[float, float]:
    """Fit ``(C, mu)`` with ``min log|Q'_{m,m+i}| >= log C + i log mu``.

    The least-squares line through the sampled minima is shifted down until
    it lies below every one of them.
    """
    e = _minimal_log_derivatives(spec, samples, i_max)
    i = np.arange(1, i_max + 1)
    finite = np.isfinite(e)
    if finite.sum() < 2:
        return 0.0, 1.0
    slope, intercept = np.polyfit(i[finite], e[finite], 1)
    intercept -= max(0.0, float(np.max(slope * i[finite] + intercept - e[finite])))
    return math.exp(intercept), math.exp(slope)


def doubling_time(
    spec: SequenceSpec, samples: Mapping[int, JuliaSample], n0_max: int
) -> Optional[int]:
    """Smallest N with sampled ``|Q'_{m,m+N}| >= 2``, or None up to *n0_max*."""
    e = _minimal_log_derivatives(spec, samples, n0_max)
    floor = math.log(2 * (1 - DOUBLING_SLACK))
    for N in range(1, n0_max + 1):
        if e[N - 1] >= floor:
            return N
    return None


def certify(spec: SequenceSpec, config: CertifyConfig = CertifyConfig()) -> HyperbolicityCert:
    """Run sampling, postcritical distance, expansion and doubling time.

    The verdict is checked in that order: ``Fail(postcritical)`` when the
    distance is below ``delta_min``, ``Fail(expansion)`` when ``mu`` is below
    ``mu_min``, ``Fail(doubling)`` when no doubling time up to ``n0_max``
    exists.

    :raises SamplingFailed: From :func:`julia_sample`.
    """
    samples = sample_times(spec, range(0, max(config.m_max, config.n_max) + 1), config)
    delta = postcritical_distance(spec, config.m_max, config.n_max, samples)
    early = {m: samples[m] for m in range(config.m_max + 1)}
    C, mu = expansion_constants(spec, early, config.i_max)
    N0 = doubling_time(spec, early, config.n0_max)

    if not delta >= config.delta_min:
        verdict = Verdict(False, "postcritical")
    elif not mu >= config.mu_min:
        verdict = Verdict(False, "expansion")
    elif N0 is None:
        verdict = Verdict(False, "doubling")
    else:
        verdict = Verdict(True)
    cert = HyperbolicityCert(
        delta, C, mu, N0, (config.m_max, config.n_max, config.i_max),
        {m: len(s) for m, s in samples.items()}, verdict, config)
    logger.info("Certificate: %s (delta %.4g, C %.4g, mu %.4g, N0 %s)",
                verdict, delta, C, mu, N0)
    return cert
