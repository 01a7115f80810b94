"""Compositions ``Q_{m,n}``, their derivatives, and escape classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from iterjulia.exceptions import BoundsViolation
from iterjulia.polyseq.base import Bounds, DegreeLedger
from iterjulia.polyseq.rules import SequenceSpec


#: Moduli beyond this are treated as escaped to numeric infinity
OVERFLOW = 1e150

#: Largest exponent we let a single polynomial step produce
_LOG_FLOAT_MAX = 700.0

#: Bisection tolerance for :func:`escape_radius`
RADIUS_TOL = 1e-12


@dataclass(frozen=True)
class Composition:
    """Result of iterating a point (or its derivative) from time m to n.

    If the orbit left the floating range, :attr:`overflow_step` is the time
    index of the last value kept and :attr:`ledger` matches that step.
    """

    value: complex
    ledger: DegreeLedger
    overflow_step: Optional[int] = None

    @property
    def overflowed(self) -> bool:
        return self.overflow_step is not None


@dataclass(frozen=True)
class Bounded:
    """Marker returned when an orbit did not escape within *horizon* steps."""

    horizon: int


def _check_order(m: int, n: int):
    if not 0 <= m <= n:
        raise ValueError(f"Need 0 <= m <= n, got m={m}, n={n}")


def _too_big(w: complex, degree: int) -> bool:
    r = abs(w)
    return r > OVERFLOW or (r > 1 and degree * math.log(r) > _LOG_FLOAT_MAX)


def compose_eval(spec: SequenceSpec, m: int, n: int, z: complex) -> Composition:
    """Evaluate ``Q_{m,n}(z) = P_n(...P_{m+1}(z))``.

    :return:
        The value with the degree ledger of ``D_{m,n}``. ``Q_{m,m}`` is the
        identity with ``D = 1``.
    """
    _check_order(m, n)
    w = complex(z)
    ledger = DegreeLedger()
    for k in range(m + 1, n + 1):
        poly = spec.polynomial(k)
        if _too_big(w, poly.degree):
            return Composition(w, ledger, k - 1)
        w = poly(w)
        ledger = ledger.extend(poly.degree)
    if abs(w) > OVERFLOW:
        return Composition(w, ledger, n)
    return Composition(w, ledger)


def orbit_derivative(spec: SequenceSpec, m: int, n: int, z: complex) -> Composition:
    """Evaluate ``Q'_{m,n}(z)`` by the chain rule along the orbit of *z*."""
    _check_order(m, n)
    w = complex(z)
    deriv = 1 + 0j
    ledger = DegreeLedger()
    for k in range(m + 1, n + 1):
        poly = spec.polynomial(k)
        if _too_big(w, poly.degree) or abs(deriv) > OVERFLOW:
            return Composition(deriv, ledger, k - 1)
        deriv *= poly.derivative(w)
        w = poly(w)
        ledger = ledger.extend(poly.degree)
    return Composition(deriv, ledger)


def log_derivatives(spec: SequenceSpec, m: int, z, steps: int) -> np.ndarray:
    """Return ``log|Q'_{m,m+i}(z)|`` for ``i = 1..steps``.

    Works in log space, so long blocks do not overflow. *z* may be a number
    or a numpy array; the result has shape ``(steps,) + shape(z)``. A
    critical point on the orbit gives ``-inf`` from then on.
    """
    w = np.array(z, dtype=complex)
    acc = np.zeros(w.shape)
    out = np.empty((steps,) + w.shape)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for i in range(steps):
            poly = spec.polynomial(m + i + 1)
            acc = acc + np.log(np.abs(poly.derivative(w)))
            out[i] = acc
            w = poly(w)
    return out


def _radius_for_degree(d: int, scale: float) -> float:
    """Smallest R with ``R^d >= scale * sum_{i<d} R^i``."""
    if scale == 0:
        return 0.0

    def holds(r: float) -> bool:
        # Divide through by R^d to stay in range
        return 1.0 >= scale * sum(r ** (i - d) for i in range(d))

    lo, hi = 0.0, 1.0 + scale
    while not holds(hi):
        hi *= 2
    while hi - lo > RADIUS_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def escape_radius(bounds: Bounds) -> float:
    """Escape radius ``R_0`` valid for every sequence within *bounds*.

    ``R_0`` is the smallest radius with ``R^d' >= 2KM * sum_{i<d'} R^i`` for
    all ``2 <= d' <= d`` and ``R_0 >= 2K``; beyond it the leading term
    dominates so that ``|P(z)| >= |z|^{d'} / (2K)``. For ``K = 1`` this is the
    classical condition together with ``R_0^2 / 2 >= R_0``.
    """
    scale = 2.0 * bounds.K * bounds.M
    radius = 2.0 * bounds.K
    for d in range(2, bounds.d + 1):
        radius = max(radius, _radius_for_degree(d, scale))
    return radius


def escape_time(
    spec: SequenceSpec, m: int, z: complex, R0: float, horizon: int
) -> Union[int, Bounded]:
    """First time ``n`` with ``|Q_{m,n}(z)| > R0``.

    Times ``m, m+1, ..., m+horizon`` are checked. Past *R0* an orbit must
    stay past it; the step after the escape is checked for that.

    :return:
        The time index ``n`` or :class:`Bounded` if the orbit stayed inside.
    :raises BoundsViolation:
        If ``P_{n+1}`` maps the escaped point back into the disc of radius
        *R0*, so *R0* is no escape radius for *spec*.
    """
    w = complex(z)
    for n in range(m, m + horizon + 1):
        if abs(w) > R0:
            if abs(w) < OVERFLOW and not abs(spec.polynomial(n + 1)(w)) > R0:
                raise BoundsViolation(n + 1, f"orbit re-entered the escape disc of radius {R0:.6g}")
            return n
        if n == m + horizon:
            break
        w = spec.polynomial(n + 1)(w)
    return Bounded(horizon)


def escape_times(
    spec: SequenceSpec, m: int, points, R0: float, horizon: int
) -> np.ndarray:
    """Vectorised :func:`escape_time` over a numpy array of points.

    :return:
        Integer array of escape times with ``-1`` where the orbit stayed
        bounded for *horizon* steps.
    """
    w = np.array(points, dtype=complex)
    result = np.full(w.shape, -1, dtype=np.int64)
    active = np.ones(w.shape, dtype=bool)
    for step in range(horizon + 1):
        escaped = active & (np.abs(w) > R0)
        result[escaped] = m + step
        active &= ~escaped
        if step == horizon or not active.any():
            break
        w[active] = spec.polynomial(m + step + 1)(w[active])
    return result
