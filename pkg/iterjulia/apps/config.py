"""Experiment configuration files.

An experiment is an INI document::

    [experiment]
    task = rigidity
    out = out/figure2
    seed = 2024
    threads = 4

    [sequence]
    rule = perturbation
    polynomial = -0.123+0.745j, 0, 1
    radii = 0.02

    [task]
    angles = 1/7, 2/7, 4/7
    seeds = 10

Polynomials are comma separated coefficient lists, constant term first.
Rules that take several polynomials separate them by ``;``. The tail of a
``prefix`` rule is described by the section ``[sequence.tail]`` (and so on
for deeper nesting). Unset bounds are derived from the coefficients.
"""

from __future__ import annotations

import logging
from configparser import Error as ParserError
from configparser import RawConfigParser
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from iterjulia.exceptions import DynamicsError
from iterjulia.polyseq import (
    Bounds,
    Constant,
    Periodic,
    PolySpec,
    PrefixThenTail,
    SeededPerturbation,
    SequenceRule,
    SequenceSpec,
)


logger = logging.getLogger(__name__)

TASKS = (
    "render", "green", "bottcher", "trace-ray", "certify",
    "rigidity", "motion", "hausdorff", "conjugate-monic",
)

RULES = ("constant", "periodic", "prefix", "perturbation")

#: Levels of ``[sequence.tail.tail...]`` nesting accepted
MAX_NESTING = 8


class ConfigError(ValueError):
    """Invalid experiment configuration."""

    def __init__(self, section: str, key: Optional[str], problem: str):
        #: Section of the offending entry
        self.section = section
        #: Key of the offending entry, if any
        self.key = key
        self.problem = problem
        super().__init__(str(self))

    def __str__(self):
        where = f"[{self.section}]" + (f" {self.key}" if self.key else "")
        return f"{where}: {self.problem}"


def _bool(text: str) -> bool:
    try:
        return RawConfigParser.BOOLEAN_STATES[text.lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}")


def _items(text: str, sep: str = ",") -> List[str]:
    return [item.strip() for item in text.split(sep) if item.strip()]


def _complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


def _complex_list(text: str) -> List[complex]:
    return [_complex(item) for item in _items(text)]


def _float_list(text: str) -> List[float]:
    return [float(item) for item in _items(text)]


def _int_list(text: str) -> List[int]:
    return [int(item, 0) for item in _items(text)]


def _angles(text: str) -> List[Fraction]:
    return [Fraction(item) for item in _items(text)]


def _angle_sets(text: str) -> List[List[Fraction]]:
    return [_angles(part) for part in _items(text, ";")]


def _pixels(text: str) -> Tuple[int, int]:
    values = _int_list(text)
    if len(values) == 1:
        values = values * 2
    if len(values) != 2:
        raise ValueError("expected one or two pixel counts")
    return values[0], values[1]


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse_optional(text: str):
        return None if text.strip() in ("", "none", "None") else parse(text)
    return parse_optional


def _int(text: str) -> int:
    return int(text, 0)


def _method(text: str) -> str:
    if text not in ("bisection", "rays"):
        raise ValueError("method must be 'bisection' or 'rays'")
    return text


#: ``key: (parser, default)`` shared by the tasks that certify
CERTIFY_PARAMS = {
    "m_max": (_int, "8"),
    "n_max": (_int, "24"),
    "i_max": (_int, "12"),
    "n0_max": (_int, "32"),
    "delta_min": (float, "1e-3"),
    "mu_min": (float, "1.02"),
    "method": (_method, "bisection"),
    "grid": (_int, "129"),
    "sample_horizon": (_int, "512"),
}

#: Tracing options shared by the ray tasks
RAY_PARAMS = {
    "t_start": (_optional(float), ""),
    "t_min": (float, "1e-5"),
    "shrink": (float, "0.65"),
    "solver_tol": (float, "1e-10"),
    "ray_horizon": (_int, "1024"),
}

TASK_PARAMS: Dict[str, Dict[str, Tuple[Callable[[str], Any], str]]] = {
    "render": {
        "m": (_int, "0"),
        "center": (_complex, "0"),
        "width": (float, "4"),
        "pixels": (_pixels, "512, 512"),
        "horizon": (_int, "512"),
        "angles": (_angles, ""),
        "png": (_bool, "yes"),
        **RAY_PARAMS,
    },
    "green": {
        "m": (_int, "0"),
        "points": (_complex_list, "2"),
        "horizon": (_int, "1024"),
    },
    "bottcher": {
        "m": (_int, "0"),
        "points": (_complex_list, "2"),
        "horizon": (_int, "1024"),
    },
    "trace-ray": {
        "m": (_int, "0"),
        "angles": (_angles, "0"),
        **RAY_PARAMS,
    },
    "certify": dict(CERTIFY_PARAMS),
    "rigidity": {
        "m": (_int, "0"),
        "angles": (_angles, "1/7, 2/7, 4/7"),
        "denominators": (_int_list, "7, 63"),
        "tol": (float, "1e-5"),
        "seeds": (_int, "1"),
        **CERTIFY_PARAMS,
        **RAY_PARAMS,
        "t_min": (float, "1e-40"),
    },
    "motion": {
        "m": (_int, "0"),
        "angles": (_angle_sets, "1/7, 2/7, 4/7"),
        "depth": (_int, "8"),
        "path_horizon": (_int, "32"),
        "steps": (_int, "3"),
        "tol": (float, "1e-6"),
        "seeds": (_int, "1"),
        **CERTIFY_PARAMS,
        **RAY_PARAMS,
        "t_min": (float, "1e-40"),
    },
    "hausdorff": {
        "m": (_int, "0"),
        "radii": (_float_list, "0.05, 0.025, 0.0125"),
        "grid": (_int, "1025"),
        "horizon": (_int, "512"),
    },
    "conjugate-monic": {
        "m_max": (_int, "8"),
        "horizon": (_optional(_int), ""),
        "tol": (float, "1e-12"),
        "samples": (_int, "100"),
    },
}


def _parse_poly(section: str, key: str, text: str) -> PolySpec:
    try:
        coeffs = _complex_list(text)
        return PolySpec(tuple(coeffs))
    except ValueError as exc:
        raise ConfigError(section, key, f"bad polynomial {text!r} ({exc})")


def _rule_from(sections: Dict[str, Dict[str, str]], name: str, depth: int = 0,
               seed: int = 0) -> Tuple[SequenceRule, List[PolySpec], List[float]]:
    """Build the rule of section *name*.

    :return: The rule, every polynomial it mentions and perturbation radii.
    """
    if depth > MAX_NESTING:
        raise ConfigError(name, None, "sequence rules nested too deeply")
    if name not in sections:
        raise ConfigError(name, None, "missing section")
    options = dict(sections[name])
    kind = options.pop("rule", None)
    if kind not in RULES:
        raise ConfigError(name, "rule", f"expected one of {', '.join(RULES)}, got {kind!r}")
    for key in ("d", "K", "M"):
        options.pop(key, None)

    def take(key: str) -> str:
        try:
            return options.pop(key)
        except KeyError:
            raise ConfigError(name, key, "missing option")

    radii: List[float] = []
    if kind == "constant":
        poly = _parse_poly(name, "polynomial", take("polynomial"))
        rule, polys = Constant(poly), [poly]
    elif kind == "periodic":
        polys = [_parse_poly(name, "polynomials", p) for p in _items(take("polynomials"), ";")]
        if not polys:
            raise ConfigError(name, "polynomials", "no polynomials given")
        rule = Periodic(tuple(polys))
    elif kind == "prefix":
        polys = [_parse_poly(name, "polynomials", p) for p in _items(take("polynomials"), ";")]
        tail, more, radii = _rule_from(sections, name + ".tail", depth + 1, seed)
        rule = PrefixThenTail(tuple(polys), tail)
        polys = polys + more
    else:
        poly = _parse_poly(name, "polynomial", take("polynomial"))
        text = take("radii")
        try:
            horizon = _optional(_int)(options.pop("horizon", ""))
            rule = SeededPerturbation(poly, tuple(_float_list(text)), seed, horizon)
        except ValueError as exc:
            raise ConfigError(name, "radii", str(exc))
        polys = [poly]
        radii = list(rule.radii)
    if options:
        raise ConfigError(name, sorted(options)[0], "unknown option")
    return rule, polys, radii


def _bounds_from(options: Dict[str, str], polys: List[PolySpec], radii: List[float]) -> Bounds:
    d = max(p.degree for p in polys)
    leads = [abs(p.lead) for p in polys]
    K = max([1.0] + leads + [1 / a for a in leads])
    M = 0.0
    for p in polys:
        for n, a in enumerate(p.coeffs[:-1]):
            M = max(M, abs(a) + (radii[n] if n < len(radii) else 0.0))
    try:
        return Bounds(
            _int(options["d"]) if "d" in options else d,
            float(options["K"]) if "K" in options else K,
            float(options["M"]) if "M" in options else M,
        )
    except ValueError as exc:
        raise ConfigError("sequence", None, f"bad bounds ({exc})")


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: what to compute, on which sequence, where to.

    :attr:`params` holds the typed task parameters with every default
    filled in; :meth:`resolved` gives the complete document back.
    """

    task: str
    out: Path
    seed: int
    threads: int
    #: Raw ``[sequence*]`` sections
    sequence: Dict[str, Dict[str, str]]
    #: Raw task options with defaults filled in
    task_options: Dict[str, str]
    params: Dict[str, Any] = field(default_factory=dict)
    name: str = "experiment"

    def spec(self, seed: Optional[int] = None) -> SequenceSpec:
        """The configured sequence; perturbations use *seed* if given."""
        rule, polys, radii = _rule_from(self.sequence, "sequence",
                                        seed=self.seed if seed is None else seed)
        return SequenceSpec(rule, _bounds_from(self.sequence["sequence"], polys, radii))

    def base_spec(self) -> SequenceSpec:
        """The unperturbed sequence: the base polynomial of a perturbation rule."""
        spec = self.spec()
        if isinstance(spec.rule, SeededPerturbation):
            return spec.with_rule(Constant(spec.rule.base))
        return spec

    def scaled_spec(self, radius: float, seed: Optional[int] = None) -> SequenceSpec:
        """Perturbation with its radii scaled so that the largest is *radius*.

        The direction of every coefficient offset stays the same.
        """
        spec = self.spec(seed)
        rule = spec.rule
        if not isinstance(rule, SeededPerturbation):
            raise ConfigError("sequence", "rule", "a perturbation rule is required")
        top = max(rule.radii)
        if top == 0:
            raise ConfigError("sequence", "radii", "all radii are zero")
        radii = tuple(r * radius / top for r in rule.radii)
        return spec.with_rule(replace(rule, radii=radii))

    def seeds(self) -> List[int]:
        """Seeds of the per-seed runs, starting at :attr:`seed`."""
        return [self.seed + i for i in range(self.params.get("seeds", 1))]

    def resolved(self) -> Dict[str, Dict[str, str]]:
        """Full configuration as sections of strings, defaults included."""
        doc = {
            "experiment": {
                "name": self.name,
                "task": self.task,
                "out": str(self.out),
                "seed": str(self.seed),
                "threads": str(self.threads),
            }
        }
        for section in sorted(self.sequence):
            doc[section] = dict(sorted(self.sequence[section].items()))
        doc["task"] = dict(sorted(self.task_options.items()))
        return doc

    def write(self, path) -> Path:
        """Write :meth:`resolved` as an INI file that loads to this config."""
        parser = RawConfigParser()
        parser.optionxform = str
        parser.read_dict(self.resolved())
        path = Path(path)
        with open(path, "w") as f:
            parser.write(f)
        return path

    def with_overrides(self, seed: Optional[int] = None, out=None,
                       threads: Optional[int] = None) -> ExperimentConfig:
        return replace(
            self,
            seed=self.seed if seed is None else int(seed),
            out=self.out if out is None else Path(out),
            threads=self.threads if threads is None else int(threads),
        )

    def with_task(self, task: str, options: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        """Same sequence and output settings, another task."""
        if task not in TASK_PARAMS:
            raise ConfigError("experiment", "task", f"unknown task {task!r}")
        known = TASK_PARAMS[task]
        source = self.task_options if options is None else options
        raw = {k: v for k, v in source.items() if k in known}
        task_options, params = _task_params(task, raw)
        return replace(self, task=task, task_options=task_options, params=params)


def _task_params(task: str, raw: Dict[str, str]) -> Tuple[Dict[str, str], Dict[str, Any]]:
    schema = TASK_PARAMS[task]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError("task", unknown[0], f"not a parameter of task {task!r}")
    options, params = {}, {}
    for key, (parse, default) in schema.items():
        text = raw.get(key, default)
        try:
            params[key] = parse(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError("task", key, f"bad value {text!r} ({exc})")
        options[key] = text
    return options, params


def _parser() -> RawConfigParser:
    parser = RawConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    return parser


def load_config(source, seed: Optional[int] = None, out=None,
                threads: Optional[int] = None) -> ExperimentConfig:
    """Read and validate an experiment configuration.

    :param source: Path, open text file or a string with the INI document.
    :raises ConfigError: For any schema violation, including polynomials
        that break the configured bounds.
    """
    parser = _parser()
    opened_here = False
    try:
        if hasattr(source, "read"):
            fp = source
        elif isinstance(source, Path) or "\n" not in str(source):
            fp = open(source)
            opened_here = True
        else:
            parser.read_string(source)
            fp = None
        if fp is not None:
            parser.read_file(fp)
    except ParserError as exc:
        raise ConfigError("experiment", None, f"unreadable configuration ({exc})")
    finally:
        if opened_here:
            fp.close()
    return from_parser(parser, seed=seed, out=out, threads=threads)


def from_parser(parser: RawConfigParser, seed: Optional[int] = None, out=None,
                threads: Optional[int] = None) -> ExperimentConfig:
    if not parser.has_section("experiment"):
        raise ConfigError("experiment", None, "missing section")
    experiment = dict(parser.items("experiment"))
    task = experiment.pop("task", None)
    if task not in TASK_PARAMS:
        raise ConfigError("experiment", "task", f"expected one of {', '.join(TASKS)}, got {task!r}")
    try:
        config_seed = _int(experiment.pop("seed", "0"))
        config_threads = _int(experiment.pop("threads", "1"))
    except ValueError as exc:
        raise ConfigError("experiment", None, str(exc))
    if config_threads < 1:
        raise ConfigError("experiment", "threads", "need at least one thread")
    name = experiment.pop("name", "experiment")
    config_out = Path(experiment.pop("out", "out"))
    if experiment:
        raise ConfigError("experiment", sorted(experiment)[0], "unknown option")

    sequence = {s: dict(parser.items(s)) for s in parser.sections()
                if s == "sequence" or s.startswith("sequence.")}
    raw = dict(parser.items("task")) if parser.has_section("task") else {}
    extra = [s for s in parser.sections()
             if s not in sequence and s not in ("experiment", "task")]
    if extra:
        raise ConfigError(extra[0], None, "unknown section")
    task_options, params = _task_params(task, raw)
    config = ExperimentConfig(task, config_out, config_seed, config_threads,
                              sequence, task_options, params, name)
    config = config.with_overrides(seed=seed, out=out, threads=threads)
    validate(config)
    return config


def validate(config: ExperimentConfig):
    """Build the sequence once and check its first polynomials.

    :raises ConfigError: If the sequence cannot be built or breaks its bounds.
    """
    spec = config.spec()
    try:
        for m in range(1, 9):
            spec.polynomial(m)
    except DynamicsError as exc:
        raise ConfigError("sequence", None, str(exc))
    logger.debug("Validated %s: task %s, rule %s", config.name, config.task,
                 config.sequence["sequence"].get("rule"))
