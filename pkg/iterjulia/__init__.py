from iterjulia.conjugation import MonicConjugacy, conjugate_sequence, monic_rescale
from iterjulia.exceptions import DynamicsError
from iterjulia.hyperbolicity import CertifyConfig, HyperbolicityCert, certify, julia_sample
from iterjulia.motion import (
    MotionReport,
    ParamPath,
    continue_along_path,
    hausdorff_distance,
    ray_landing_motion,
    shadow_conjugate,
)
from iterjulia.polyseq import (
    Bounds,
    Constant,
    Periodic,
    PolySpec,
    PrefixThenTail,
    SeededPerturbation,
    SequenceSpec,
    compose_eval,
    escape_radius,
    escape_time,
)
from iterjulia.potential import bottcher, green, inverse_bottcher
from iterjulia.rays import RayTrace, co_landing_groups, pushforward_angle, trace_ray
from iterjulia.render import Viewport, render_escape
from iterjulia.utils import RABBIT_C

try:
    from iterjulia._version import version as __version__
except ImportError:
    # package is not installed
    __version__ = "unknown"

__all__ = [
    "Bounds",
    "PolySpec",
    "SequenceSpec",
    "Constant",
    "Periodic",
    "PrefixThenTail",
    "SeededPerturbation",
    "compose_eval",
    "escape_radius",
    "escape_time",
    "MonicConjugacy",
    "monic_rescale",
    "conjugate_sequence",
    "green",
    "bottcher",
    "inverse_bottcher",
    "RayTrace",
    "trace_ray",
    "co_landing_groups",
    "pushforward_angle",
    "CertifyConfig",
    "HyperbolicityCert",
    "certify",
    "julia_sample",
    "ParamPath",
    "MotionReport",
    "shadow_conjugate",
    "continue_along_path",
    "ray_landing_motion",
    "hausdorff_distance",
    "Viewport",
    "render_escape",
    "DynamicsError",
    "RABBIT_C",
]
__pypi_url__ = "https://pypi.org/project/iterjulia/"
