"""Additional utility functions for iterjulia."""

import math
from fractions import Fraction
from typing import Union

Turns = Union[Fraction, float, int]

#: Parameter of the Douady rabbit z^2 + c. Its alpha fixed point has
#: multiplier of modulus about 1.107 and rotation number 1/3; the rays 1/7,
#: 2/7 and 4/7 land there. The value -0.745 + 0.123i, with real and imaginary
#: parts exchanged, is a different map where these rays do not co-land.
RABBIT_C = -0.123 + 0.745j


def as_turns(theta: Turns) -> Fraction:
    """Convert an angle in turns to an exact fraction in [0, 1).

    Floats are converted exactly, so ``as_turns(0.1)`` is the binary value of
    ``0.1`` rather than ``1/10``.
    """
    if isinstance(theta, str):
        theta = Fraction(theta)
    return Fraction(theta) % 1


def same_kind(theta: Fraction, like: Turns) -> Turns:
    """Return *theta* as a float if *like* was a float."""
    if isinstance(like, float):
        return float(theta)
    return theta


def pretty_angle(theta: Turns, max_denominator: int = 4096) -> str:
    """Format an angle in turns, as a short fraction when it is one."""

    exact = as_turns(theta)
    if exact.denominator <= max_denominator:
        if exact.denominator == 1:
            return str(exact.numerator)
        return f"{exact.numerator}/{exact.denominator}"
    return f"{float(exact):.10g}"


def wrap_phase(x: float) -> float:
    """Reduce a phase in radians to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    if y == -math.pi:
        return math.pi
    return y
