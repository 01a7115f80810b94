from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from iterjulia.exceptions import BoundsViolation


#: Exact composite degrees are dropped once they would exceed this value
EXACT_DEGREE_LIMIT = 2 ** 62


@dataclass(frozen=True)
class Bounds:
    """Degree and coefficient bounds shared by every polynomial of a sequence.

    :param d:
        Maximal degree, at least 2.
    :param K:
        Leading coefficients satisfy ``1/K <= |a| <= K``.
    :param M:
        All other coefficients satisfy ``|a| <= M``.
    """

    d: int
    K: float = 1.0
    M: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"Degree bound must be an integer >= 2, got {self.d!r}")
        if self.K < 1:
            raise ValueError(f"Leading band K must be >= 1, got {self.K!r}")
        if self.M < 0:
            raise ValueError(f"Coefficient cap M must be >= 0, got {self.M!r}")


@dataclass(frozen=True)
class PolySpec:
    """A polynomial given by its coefficients ``a_0, ..., a_d``."""

    coeffs: Tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if len(coeffs) < 3:
            raise ValueError("Polynomials of the sequence must have degree >= 2")
        if coeffs[-1] == 0:
            raise ValueError("Highest coefficient must be nonzero")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def quadratic(cls, c: complex) -> PolySpec:
        """The family member ``z^2 + c``."""
        return cls((c, 0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return self.coeffs[-1]

    def is_monic(self, tol: float = 1e-12) -> bool:
        return abs(self.lead - 1) <= tol

    def __call__(self, z):
        """Evaluate at *z* (a number or a numpy array) by Horner's rule."""
        coeffs = self.coeffs
        acc = coeffs[-1]
        for a in coeffs[-2::-1]:
            acc = acc * z + a
        return acc

    def derivative(self, z):
        """Evaluate ``P'(z)``."""
        coeffs = self.coeffs
        d = len(coeffs) - 1
        acc = d * coeffs[-1]
        for j in range(d - 1, 0, -1):
            acc = acc * z + j * coeffs[j]
        return acc

    def ratio_to_leading_power(self, w: complex) -> complex:
        """Return ``P(w) / w^d`` without forming ``w^d``."""
        u = 1 / w
        acc = self.coeffs[0]
        for a in self.coeffs[1:]:
            acc = acc * u + a
        return acc

    def log_derivative_ratio(self, w: complex) -> complex:
        """Return ``w P'(w) / (d P(w))``, which tends to 1 as ``|w|`` grows."""
        u = 1 / w
        coeffs = self.coeffs
        value = coeffs[0]
        slope = 0j
        for j, a in enumerate(coeffs[1:], start=1):
            value = value * u + a
            slope = slope * u + j * a
        return slope / (self.degree * value)

    def derivative_coeffs(self) -> np.ndarray:
        """Coefficients of ``P'`` in increasing order."""
        return np.polynomial.polynomial.polyder(np.array(self.coeffs))

    def check(self, bounds: Bounds, m: int = 0) -> PolySpec:
        """Verify this polynomial against *bounds*.

        :raises BoundsViolation:
            When the degree, the leading coefficient or any other coefficient
            is out of band.
        """
        if self.degree > bounds.d:
            raise BoundsViolation(m, f"degree {self.degree} exceeds {bounds.d}")
        lead = abs(self.lead)
        # Relative slack absorbs rounding of rescaled leads
        slack = 1e-12
        if lead < (1 - slack) / bounds.K or lead > bounds.K * (1 + slack):
            raise BoundsViolation(
                m, f"|leading coefficient| = {lead:.6g} outside "
                   f"[{1 / bounds.K:.6g}, {bounds.K:.6g}]")
        for n, a in enumerate(self.coeffs[:-1]):
            if abs(a) > bounds.M * (1 + slack):
                raise BoundsViolation(
                    m, f"|a_{n}| = {abs(a):.6g} exceeds M = {bounds.M:.6g}")
        return self

    def __str__(self):
        terms = []
        for n in range(self.degree, -1, -1):
            a = self.coeffs[n]
            if a == 0:
                continue
            power = "" if n == 0 else ("z" if n == 1 else f"z^{n}")
            if a == 1 and n:
                terms.append(power)
            else:
                text = f"{a.real:g}" if a.imag == 0 else f"({a:g})"
                terms.append(f"{text}*{power}" if power else text)
        return " + ".join(terms)


@dataclass(frozen=True)
class DegreeLedger:
    """Degree ``D_{m,n}`` of a composition, kept as a log and a reciprocal.

    The exact integer is carried while it stays below
    :data:`EXACT_DEGREE_LIMIT` and is ``None`` afterwards.
    """

    logD: float = 0.0
    invD: float = 1.0
    exactD: Optional[int] = 1

    def extend(self, d: int) -> DegreeLedger:
        """Ledger of the composition with one more map of degree *d*."""
        exact = None
        if self.exactD is not None and self.exactD * d <= EXACT_DEGREE_LIMIT:
            exact = self.exactD * d
        return DegreeLedger(self.logD + math.log(d), self.invD / d, exact)

    @classmethod
    def of(cls, degrees: Sequence[int]) -> DegreeLedger:
        ledger = cls()
        for d in degrees:
            ledger = ledger.extend(d)
        return ledger

    @property
    def degree(self) -> float:
        """``D_{m,n}`` as a float (may be ``inf`` for long compositions)."""
        if self.exactD is not None:
            return float(self.exactD)
        try:
            return math.exp(self.logD)
        except OverflowError:
            return math.inf
