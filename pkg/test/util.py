import cmath
import contextlib
import shutil
import tempfile
from fractions import Fraction

from iterjulia.polyseq import Bounds, Constant, PolySpec, SeededPerturbation, SequenceSpec
from iterjulia.utils import RABBIT_C


RABBIT_ANGLES = (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7))

#: Potential reached by rays whose landing point is compared at 1e-6
DEEP = 1e-40


def quadratic(c: complex, M: float = None) -> SequenceSpec:
    """Classical iteration of ``z^2 + c``."""
    return SequenceSpec(Constant(PolySpec.quadratic(c)),
                        Bounds(2, 1.0, abs(c) if M is None else M))


SQUARE = quadratic(0)
RABBIT = quadratic(RABBIT_C)


def perturbed_rabbit(radius: float, seed: int = 7) -> SequenceSpec:
    """``z^2 + c_m`` with ``c_m`` uniform in a disc about the rabbit parameter."""
    return SequenceSpec(
        SeededPerturbation(PolySpec.quadratic(RABBIT_C), (radius,), seed),
        Bounds(2, 1.0, abs(RABBIT_C) + radius))


def alpha_fixed_point(c: complex = RABBIT_C) -> complex:
    return (1 - cmath.sqrt(1 - 4 * c)) / 2


def beta_fixed_point(c: complex) -> complex:
    return (1 + cmath.sqrt(1 - 4 * c)) / 2


@contextlib.contextmanager
def tmp_dir():
    path = tempfile.mkdtemp()
    try:
        yield path
    finally:
        shutil.rmtree(path, ignore_errors=True)
