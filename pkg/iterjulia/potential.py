"""Green's functions and Böttcher coordinates of monic bounded sequences.

Everything here is built on :func:`lifted_log`, which returns
``log phi_n(Q_{m,n}(z))`` at the first time ``n`` where the orbit of *z*
leaves the escape disc, together with ``d/dz log phi_m(z)``. From there:

* ``G_m(z)`` is ``Re(log phi_n) / D_{m,n}``,
* ``phi_m(z)`` is a ``D_{m,n}``-th root of ``phi_n``, with the root picked
  by continuing the external ray through *z* outwards,
* points on external rays are found by Newton's method on the lifted
  logarithm (:class:`RayFollower`).

Non-monic sequences must be conjugated first
(:func:`iterjulia.conjugation.monic_rescale`).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np

from iterjulia.exceptions import BranchLoss, ContinuationStall
from iterjulia.polyseq import DegreeLedger, PolySpec, SequenceSpec, escape_radius
from iterjulia.utils import Turns, as_turns, wrap_phase


logger = logging.getLogger(__name__)

#: Iterations allowed before an orbit counts as not escaped
DEFAULT_HORIZON = 1024

#: Leads must be this close to 1
MONIC_TOL = 1e-12

#: Corrections below this (relative) end the telescoping product
CORRECTION_TOL = 1e-14

#: Maximal number of correction factors after escape
MAX_CORRECTIONS = 64

#: Orbits beyond this modulus contribute no measurable correction
CORRECTION_CUTOFF = 1e60

#: Smallest potential :func:`inverse_bottcher` works at
MIN_POTENTIAL = 1e-4

#: Bailout modulus used by :func:`green_grid`
GRID_BAILOUT = 1e10

_BLOCK = 1e100
_LOG_BLOCK = math.log(_BLOCK)


@dataclass(frozen=True)
class NotEscaped:
    """The orbit stayed in the escape disc for *horizon* steps."""

    horizon: int


@dataclass(frozen=True)
class LiftedLog:
    """Lifted logarithmic Böttcher coordinate of a point at time m."""

    #: First time the orbit is outside the escape disc
    n: int
    #: ``log phi_n(Q_{m,n}(z))``, imaginary part from the principal ``log``
    value: complex
    #: Degree of ``Q_{m,n}``
    ledger: DegreeLedger
    #: ``d/dz log phi_m(z)``
    dlog: complex
    #: Size of the last correction term
    residual: float
    #: Time of the last orbit point used
    n_used: int

    @property
    def green(self) -> float:
        return self.ledger.invD * self.value.real


@dataclass(frozen=True)
class PotentialResult:
    """Green's function and Böttcher coordinate of a point."""

    green: float
    bottcher: complex
    #: Time at which the orbit first left the escape disc
    n_escape: int
    #: Time of the last correction factor
    n_used: int
    residual: float


@dataclass(frozen=True)
class RayPoint:
    """A point *z* with ``G(z) = potential`` on the ray of angle *angle*."""

    z: complex
    potential: float
    angle: Turns
    #: ``d/dz log phi_m`` at *z*
    dlog: complex = field(default=0j, repr=False, compare=False)


def _monic_polynomial(spec: SequenceSpec, k: int) -> PolySpec:
    poly = spec.polynomial(k)
    if abs(poly.lead - 1) > MONIC_TOL:
        raise ValueError(
            f"P_{k} has leading coefficient {poly.lead}; conjugate the "
            "sequence to a monic one first")
    return poly


def lifted_log(
    spec: SequenceSpec,
    m: int,
    z: complex,
    horizon: int = DEFAULT_HORIZON,
    R0: Optional[float] = None,
) -> Union[LiftedLog, NotEscaped]:
    """Evaluate the lifted logarithm of ``phi_m`` at *z*.

    The orbit is iterated until ``|Q_{m,n}(z)| > R0``, then
    ``log phi_n(w) = Log w + sum_k Log(P_{k+1}(w_k) / w_k^d) / D_{n,k+1}``
    is summed with principal logarithms until the terms are negligible.
    """
    if R0 is None:
        R0 = escape_radius(spec.bounds)
    w = complex(z)
    ledger = DegreeLedger()
    # Q'_{m,n}(z) = dq * _BLOCK ** scale
    dq = 1 + 0j
    scale = 0
    n = m
    while abs(w) <= R0:
        if n - m >= horizon:
            return NotEscaped(horizon)
        poly = _monic_polynomial(spec, n + 1)
        dq *= poly.derivative(w)
        w = poly(w)
        ledger = ledger.extend(poly.degree)
        n += 1
        size = abs(dq)
        if size > _BLOCK:
            dq /= _BLOCK
            scale += 1
        elif 0 < size < 1 / _BLOCK:
            dq *= _BLOCK
            scale -= 1

    if dq == 0:
        dlog = 0j
    else:
        try:
            dlog = cmath.exp(cmath.log(dq) + scale * _LOG_BLOCK - ledger.logD - cmath.log(w))
        except OverflowError:
            dlog = complex(math.nan, math.nan)

    value = cmath.log(w)
    inv = 1.0
    residual = 0.0
    k = n
    for _ in range(MAX_CORRECTIONS):
        if abs(w) > CORRECTION_CUTOFF:
            break
        poly = _monic_polynomial(spec, k + 1)
        inv /= poly.degree
        correction = inv * cmath.log(poly.ratio_to_leading_power(w))
        dlog *= poly.log_derivative_ratio(w)
        value += correction
        residual = abs(correction)
        k += 1
        if residual <= CORRECTION_TOL * max(1.0, abs(value)):
            break
        w = poly(w)
    return LiftedLog(n, value, ledger, dlog, residual, k)


def green(
    spec: SequenceSpec, m: int, z: complex, horizon: int = DEFAULT_HORIZON
) -> Union[float, NotEscaped]:
    """Green's function ``G_m(z)`` of the basin of infinity at time *m*."""
    result = lifted_log(spec, m, z, horizon)
    if isinstance(result, NotEscaped):
        return result
    return result.green


def green_grid(
    spec: SequenceSpec,
    m: int,
    points,
    horizon: int = DEFAULT_HORIZON,
    bailout: float = GRID_BAILOUT,
) -> np.ndarray:
    """Vectorised Green's function, ``nan`` where the orbit did not escape.

    Uses ``log|Q_{m,n}(z)| / D_{m,n}`` at the first time the orbit passes
    *bailout*; the error is of order ``M / (bailout D_{m,n})``.
    """
    w = np.array(points, dtype=complex)
    out = np.full(w.shape, np.nan)
    active = np.ones(w.shape, dtype=bool)
    ledger = DegreeLedger()
    for step in range(horizon + 1):
        big = active & (np.abs(w) > bailout)
        out[big] = ledger.invD * np.log(np.abs(w[big]))
        active &= ~big
        if step == horizon or not active.any():
            break
        poly = spec.polynomial(m + step + 1)
        w[active] = poly(w[active])
        ledger = ledger.extend(poly.degree)
    return out


class AngleLadder:
    """Exact angles ``D_{m,n} theta mod 1`` for increasing n."""

    def __init__(self, spec: SequenceSpec, m: int, theta: Turns):
        self.spec = spec
        self.m = m
        self._angles: List[Fraction] = [as_turns(theta)]

    def at(self, n: int) -> Fraction:
        if n < self.m:
            raise ValueError(f"Angle requested at time {n} before {self.m}")
        while len(self._angles) <= n - self.m:
            k = self.m + len(self._angles)
            d = self.spec.polynomial(k).degree
            self._angles.append((d * self._angles[-1]) % 1)
        return self._angles[n - self.m]


class RayFollower:
    """Newton continuation of one external ray of a monic sequence.

    Points are solved for in the lifted logarithmic coordinate, where the
    ray is a horizontal line, so the residual at a candidate *z* is
    ``log phi_m(z) - (t + 2 pi i theta)`` with the angular part reduced
    modulo ``2 pi / D``.

    :param theta:
        Angle in turns at time *m*, or at time *level* when that is given.
    :param level:
        Solve at this fixed time instead of the first escaping time. Used to
        follow a ray through a point that escapes late.
    :param guard_steps:
        Reject steps that move much faster than the previous one. Only
        meaningful while descending.
    """

    #: Reject a Newton seed whose phase residual is at least this
    PHASE_GUARD = math.pi / 2

    #: A step may move at most this much faster than the previous one
    STEP_GROWTH = 2.0

    #: Maximal number of potential step halvings per advance
    MAX_SUBDIVISIONS = 30

    #: Newton iterations per solve
    NEWTON_STEPS = 40

    #: Relative step of the difference quotient used without an analytic derivative
    DIFFERENCE_STEP = 1e-7

    def __init__(
        self,
        spec: SequenceSpec,
        m: int,
        theta: Turns,
        horizon: int = DEFAULT_HORIZON,
        tol: float = 1e-10,
        level: Optional[int] = None,
        phase_guard: Optional[float] = None,
        guard_steps: bool = True,
    ):
        self.spec = spec
        self.m = m
        self.theta = theta
        self.horizon = horizon
        self.tol = tol
        self.level = level
        self.phase_guard = self.PHASE_GUARD if phase_guard is None else phase_guard
        self.guard_steps = guard_steps
        self.R0 = escape_radius(spec.bounds)
        self.subdivisions = 0
        #: Set once an accepted step moved no more than the Newton tolerance
        self.resolved = False
        self._ladder = AngleLadder(spec, m, theta)
        self._speed: Optional[float] = None
        self._warned = False

    def _residual(self, ll: LiftedLog, t: float) -> Optional[Tuple[complex, float]]:
        if self.level is None:
            phase = ll.value.imag
            inv = ll.ledger.invD
            target = self._ladder.at(ll.n)
        else:
            if ll.n > self.level:
                return None
            factor = math.prod(self.spec.degrees(ll.n, self.level))
            phase = ll.value.imag * factor
            inv = ll.ledger.invD / factor
            target = self.theta
        dphase = wrap_phase(phase - 2 * math.pi * float(target))
        return complex(ll.green - t, inv * dphase), dphase

    def _difference_quotient(self, z: complex, t: float, rho: complex) -> Optional[complex]:
        """Forward difference of the residual, for points without ``dlog``."""
        h = self.DIFFERENCE_STEP * max(1.0, abs(z))
        ll = lifted_log(self.spec, self.m, z + h, self.horizon, self.R0)
        if isinstance(ll, NotEscaped):
            return None
        res = self._residual(ll, t)
        if res is None:
            return None
        slope = (res[0] - rho) / h
        return slope if slope != 0 and cmath.isfinite(slope) else None

    def solve(self, seed: complex, t: float) -> Optional[RayPoint]:
        """Newton-correct *seed* onto the ray at potential *t*.

        Where the analytic derivative vanishes or overflows, a complex
        difference quotient with step ``DIFFERENCE_STEP * max(1, |z|)`` is
        used instead.
        """
        z = complex(seed)
        for step in range(self.NEWTON_STEPS):
            ll = lifted_log(self.spec, self.m, z, self.horizon, self.R0)
            if isinstance(ll, NotEscaped):
                return None
            res = self._residual(ll, t)
            if res is None:
                return None
            rho, dphase = res
            if step == 0 and abs(dphase) >= self.phase_guard:
                logger.debug("Seed %s rejected, phase residual %.3g", seed, dphase)
                return None
            slope = ll.dlog
            if slope == 0 or not cmath.isfinite(slope):
                if not self._warned:
                    logger.warning("Ray %s: no analytic derivative at %s, "
                                   "using difference quotients", self.theta, z)
                    self._warned = True
                slope = self._difference_quotient(z, t, rho)
                if slope is None:
                    return None
            dz = -rho / slope
            z += dz
            if not cmath.isfinite(z):
                return None
            if abs(dz) <= self.tol * max(1.0, abs(z)):
                return RayPoint(z, t, self.theta, slope)
        return None

    def start(self, t: float) -> Optional[RayPoint]:
        """First point at potential *t*, seeded where ``phi`` is near the identity."""
        self._speed = None
        seed = cmath.exp(complex(t, 2 * math.pi * float(self.theta)))
        return self.solve(seed, t)

    def advance(self, point: RayPoint, t_next: float) -> Optional[RayPoint]:
        """Continue from *point* to potential *t_next*.

        The potential step is halved geometrically whenever the Newton solve
        fails or the step guard trips.

        :return: The new point, or ``None`` once the subdivision budget is spent.
        """
        current = point
        halvings = 0
        while True:
            t_try = t_next
            while True:
                seed = current.z + (t_try - current.potential) / current.dlog
                found = self.solve(seed, t_try)
                if found is not None:
                    span = abs(math.log(t_try / current.potential))
                    moved = abs(found.z - current.z)
                    speed = moved / span
                    # speeds below the solver resolution are rounding noise
                    floor = self.tol * max(1.0, abs(found.z)) / span
                    if (not self.guard_steps or self._speed is None
                            or speed <= self.STEP_GROWTH * max(self._speed, floor)):
                        break
                    logger.debug("Step to t=%.3g rejected: speed %.3g after %.3g",
                                 t_try, speed, self._speed)
                halvings += 1
                self.subdivisions += 1
                if halvings > self.MAX_SUBDIVISIONS:
                    logger.debug("Ray %s stalled at t=%.3g", self.theta, current.potential)
                    return None
                t_try = math.sqrt(current.potential * t_try)
            self._speed = speed
            if moved <= self.tol * max(1.0, abs(found.z)):
                self.resolved = True
            current = found
            if t_try == t_next:
                return current


def _continued_root(
    spec: SequenceSpec, m: int, z: complex, ll: LiftedLog, horizon: int, R0: float
) -> complex:
    """``phi_m(z)`` for a point escaping after time m.

    The ray through *z* is followed outwards (at the fixed time ``ll.n``)
    until it leaves the escape disc at time m, where the principal branch
    gives its angle. That angle selects the ``D_{m,n}``-th root.
    """
    D = ll.ledger.exactD
    if D is None:
        raise BranchLoss(z, ll.green)
    beta = ll.value.imag / (2 * math.pi)
    follower = RayFollower(
        spec, m, beta, horizon, level=ll.n, phase_guard=math.pi / 4,
        guard_steps=False)
    point = RayPoint(complex(z), ll.green, beta, ll.dlog)
    while abs(point.z) <= R0:
        point = follower.advance(point, 2 * point.potential)
        if point is None:
            raise BranchLoss(z, ll.green)
    top = lifted_log(spec, m, point.z, horizon, R0)
    if isinstance(top, NotEscaped) or top.n != m:
        raise BranchLoss(z, ll.green)
    angle = (top.value.imag / (2 * math.pi)) % 1.0
    j = round(angle * D - beta) % D
    logger.debug("Root %d of %d chosen for %s", j, D, z)
    return cmath.exp(ll.ledger.invD * complex(ll.value.real, ll.value.imag + 2 * math.pi * j))


def bottcher(
    spec: SequenceSpec, m: int, z: complex, horizon: int = DEFAULT_HORIZON
) -> Union[PotentialResult, NotEscaped]:
    """Böttcher coordinate ``phi_m(z)`` with its Green's function.

    :raises BranchLoss:
        If the root branch of a late-escaping point cannot be followed.
    """
    R0 = escape_radius(spec.bounds)
    ll = lifted_log(spec, m, z, horizon, R0)
    if isinstance(ll, NotEscaped):
        return ll
    if ll.n == m:
        phi = cmath.exp(ll.value)
    else:
        phi = _continued_root(spec, m, z, ll, horizon, R0)
    return PotentialResult(ll.green, phi, ll.n, ll.n_used, ll.residual)


def inverse_bottcher(
    spec: SequenceSpec,
    m: int,
    w: complex,
    tol: float = 1e-10,
    horizon: int = DEFAULT_HORIZON,
    shrink: float = 0.65,
) -> complex:
    """Solve ``phi_m(z) = w`` for ``|w| > 1``.

    Starts where ``phi_m`` is close to the identity, at modulus ``4 R0`` on the
    ray through *w*, and steps the potential down geometrically to
    ``log |w|``.

    :raises ValueError: If ``log |w|`` is below :data:`MIN_POTENTIAL`.
    :raises ContinuationStall: If the continuation fails.
    """
    t = math.log(abs(w))
    if t < MIN_POTENTIAL:
        raise ValueError(f"|w| = {abs(w)} is too close to 1 (potential {t:.3g})")
    theta = as_turns(cmath.phase(w) / (2 * math.pi))
    follower = RayFollower(spec, m, theta, horizon, tol)
    t_far = math.log(4 * follower.R0)
    point = follower.start(max(t, t_far))
    if point is None:
        raise ContinuationStall(w, max(t, t_far))
    while point.potential > t:
        nxt = follower.advance(point, max(point.potential * shrink, t))
        if nxt is None:
            raise ContinuationStall(w, point.potential)
        point = nxt
    return point.z
