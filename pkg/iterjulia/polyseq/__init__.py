from iterjulia.polyseq.base import Bounds, DegreeLedger, PolySpec
from iterjulia.polyseq.iterate import (
    OVERFLOW,
    Bounded,
    Composition,
    compose_eval,
    escape_radius,
    escape_time,
    escape_times,
    log_derivatives,
    orbit_derivative,
)
from iterjulia.polyseq.rules import (
    Constant,
    Periodic,
    PrefixThenTail,
    Rescaled,
    SeededPerturbation,
    SequenceRule,
    SequenceSpec,
    SlotOverride,
    polynomial_at,
)

__all__ = [
    "Bounds",
    "DegreeLedger",
    "PolySpec",
    "SequenceRule",
    "Constant",
    "Periodic",
    "PrefixThenTail",
    "SeededPerturbation",
    "SlotOverride",
    "Rescaled",
    "SequenceSpec",
    "polynomial_at",
    "OVERFLOW",
    "Bounded",
    "Composition",
    "compose_eval",
    "orbit_derivative",
    "log_derivatives",
    "escape_radius",
    "escape_time",
    "escape_times",
]
