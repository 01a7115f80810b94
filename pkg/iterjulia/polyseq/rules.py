"""Finite rules describing infinite bounded polynomial sequences.

Polynomials are indexed from 1: ``P_m`` maps time ``m - 1`` to time ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from iterjulia.exceptions import IndexBeyondHorizon
from iterjulia.polyseq.base import Bounds, PolySpec


class SequenceRule:
    """Base class of the rules; ``polynomial(m)`` must be a pure function."""

    #: Name used in experiment configuration files
    name = ""

    def polynomial(self, m: int) -> PolySpec:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(SequenceRule):
    """The same polynomial at every time (classical iteration)."""

    poly: PolySpec
    name = "constant"

    def polynomial(self, m: int) -> PolySpec:
        return self.poly


@dataclass(frozen=True)
class Periodic(SequenceRule):
    """Cycle through *polys*, starting with ``polys[0]`` at ``m = 1``."""

    polys: Tuple[PolySpec, ...]
    name = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        if not self.polys:
            raise ValueError("Periodic rule needs at least one polynomial")

    def polynomial(self, m: int) -> PolySpec:
        return self.polys[(m - 1) % len(self.polys)]


@dataclass(frozen=True)
class PrefixThenTail(SequenceRule):
    """Explicit polynomials for ``m <= len(prefix)``, then *tail*.

    The tail rule is indexed from 1 again right after the prefix.
    """

    prefix: Tuple[PolySpec, ...]
    tail: SequenceRule
    name = "prefix"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))

    def polynomial(self, m: int) -> PolySpec:
        if m <= len(self.prefix):
            return self.prefix[m - 1]
        return self.tail.polynomial(m - len(self.prefix))


@dataclass(frozen=True)
class SeededPerturbation(SequenceRule):
    """Base polynomial with each coefficient moved uniformly inside a disc.

    Coefficient ``n`` of ``P_m`` is ``base.coeffs[n] + radii[n] * u`` where
    ``u`` is uniform in the closed unit disc. Every (m, n) pair gets its own
    draw from a Philox stream keyed by *seed* with high counter words
    ``(m, n)``, so the result does not depend on evaluation order or thread.

    :param horizon:
        If given, only ``m <= horizon`` is perturbed and later polynomials
        equal *base*.
    """

    base: PolySpec
    radii: Tuple[float, ...]
    seed: int
    horizon: Optional[int] = None
    name = "perturbation"

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if len(radii) < len(self.base.coeffs):
            radii = radii + (0.0,) * (len(self.base.coeffs) - len(radii))
        if len(radii) != len(self.base.coeffs) or any(r < 0 for r in radii):
            raise ValueError("One nonnegative radius per coefficient is required")
        object.__setattr__(self, "radii", radii)

    def offset(self, m: int, n: int) -> complex:
        """The perturbation drawn for coefficient *n* of ``P_m``."""
        radius = self.radii[n]
        if not radius:
            return 0j
        gen = np.random.Generator(
            np.random.Philox(key=self.seed, counter=[0, 0, m, n]))
        while True:
            u, v = gen.uniform(-1.0, 1.0, size=2)
            if u * u + v * v <= 1.0:
                return radius * complex(u, v)

    def polynomial(self, m: int) -> PolySpec:
        if self.horizon is not None and m > self.horizon:
            return self.base
        coeffs = [a + self.offset(m, n) for n, a in enumerate(self.base.coeffs)]
        return PolySpec(tuple(coeffs))


@dataclass(frozen=True)
class SlotOverride(SequenceRule):
    """A base rule with finitely many ``(m, n)`` coefficient slots replaced."""

    base: SequenceRule
    slots: Tuple[Tuple[Tuple[int, int], complex], ...]
    _by_time: Dict[int, List[Tuple[int, complex]]] = field(
        default_factory=dict, init=False, repr=False, compare=False)
    name = "override"

    def __post_init__(self):
        slots = self.slots.items() if isinstance(self.slots, Mapping) else self.slots
        object.__setattr__(
            self, "slots",
            tuple(sorted(((int(m), int(n)), complex(v)) for (m, n), v in slots)))
        for (m, n), v in self.slots:
            self._by_time.setdefault(m, []).append((n, v))

    def polynomial(self, m: int) -> PolySpec:
        poly = self.base.polynomial(m)
        changes = self._by_time.get(m)
        if not changes:
            return poly
        coeffs = list(poly.coeffs)
        for n, v in changes:
            if n >= len(coeffs):
                coeffs.extend([0j] * (n + 1 - len(coeffs)))
            coeffs[n] = v
        return PolySpec(tuple(coeffs))


@dataclass(frozen=True)
class Rescaled(SequenceRule):
    """Linear conjugate ``P~_m(w) = s_m P_m(w / s_{m-1})`` of a base rule.

    Defined for ``1 <= m < len(scales)``.
    """

    base: SequenceRule
    scales: Tuple[complex, ...]
    name = "rescaled"

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(complex(s) for s in self.scales))

    def polynomial(self, m: int) -> PolySpec:
        if m >= len(self.scales):
            raise IndexBeyondHorizon(m, len(self.scales) - 1)
        poly = self.base.polynomial(m)
        outer = self.scales[m]
        inner = 1 / self.scales[m - 1]
        return PolySpec(tuple(outer * a * inner ** n for n, a in enumerate(poly.coeffs)))


@dataclass(frozen=True)
class SequenceSpec:
    """A bounded polynomial sequence: a rule together with its bounds."""

    rule: SequenceRule
    bounds: Bounds
    _cache: Dict[int, PolySpec] = field(
        default_factory=dict, init=False, repr=False, compare=False)

    def polynomial(self, m: int) -> PolySpec:
        """Return ``P_m``, checked against the bounds.

        :raises BoundsViolation:
            When the rule produces an out-of-band polynomial.
        """
        try:
            return self._cache[m]
        except KeyError:
            pass
        if m < 1:
            raise ValueError(f"Polynomials are indexed from 1, got m={m}")
        poly = self.rule.polynomial(m).check(self.bounds, m)
        self._cache[m] = poly
        return poly

    def polynomials(self, m: int, n: int) -> Iterator[PolySpec]:
        """Iterate ``P_{m+1}, ..., P_n``."""
        for k in range(m + 1, n + 1):
            yield self.polynomial(k)

    def degrees(self, m: int, n: int) -> List[int]:
        return [p.degree for p in self.polynomials(m, n)]

    def is_monic(self, upto: int, tol: float = 1e-12) -> bool:
        """Whether ``P_1, ..., P_upto`` are all monic to within *tol*."""
        return all(p.is_monic(tol) for p in self.polynomials(0, upto))

    def is_constant(self) -> bool:
        return isinstance(self.rule, Constant) or (
            isinstance(self.rule, Periodic) and len(set(self.rule.polys)) == 1)

    def with_rule(self, rule: SequenceRule, bounds: Optional[Bounds] = None) -> SequenceSpec:
        return SequenceSpec(rule, bounds or self.bounds)


def polynomial_at(spec: SequenceSpec, m: int) -> PolySpec:
    """Return the ``m``-th polynomial of *spec* (``m >= 1``)."""
    return spec.polynomial(m)
