"""Experiment pipelines, one function per task.

Each task reads its typed parameters from the configuration, writes its
artifacts to ``config.out`` and returns the result part of the report.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List

import numpy as np

from iterjulia.apps.config import ExperimentConfig
from iterjulia.apps.report import write_trace_csv
from iterjulia.conjugation import conjugate_sequence, monic_rescale
from iterjulia.exceptions import DynamicsError
from iterjulia.hyperbolicity import CertifyConfig, HyperbolicityCert, certify, julia_sample
from iterjulia.motion import ParamPath, compare_motions, hausdorff_distance
from iterjulia.polyseq import escape_radius
from iterjulia.potential import NotEscaped, bottcher, green
from iterjulia.rays import portrait, trace_ray
from iterjulia.render import Viewport, overlay_rays, render_escape, save
from iterjulia.utils import pretty_angle


logger = logging.getLogger(__name__)

Result = Dict[str, Any]


def certify_config(params: Dict[str, Any]) -> CertifyConfig:
    return CertifyConfig(
        m_max=params["m_max"],
        n_max=params["n_max"],
        i_max=params["i_max"],
        n0_max=params["n0_max"],
        delta_min=params["delta_min"],
        mu_min=params["mu_min"],
        method=params["method"],
        horizon=params["sample_horizon"],
        grid=params["grid"],
    )


def trace_options(params: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "t_start": params["t_start"],
        "t_min": params["t_min"],
        "shrink": params["shrink"],
        "tol": params["solver_tol"],
        "horizon": params["ray_horizon"],
    }


def cert_summary(cert: HyperbolicityCert) -> Result:
    return {
        "verdict": str(cert.verdict),
        "delta": cert.delta,
        "C": cert.C,
        "mu": cert.mu,
        "N0": cert.N0,
        "horizons": {"m_max": cert.horizons[0], "n_max": cert.horizons[1],
                     "i_max": cert.horizons[2]},
        "samples": cert.samples,
    }


def _per_seed(config: ExperimentConfig, work: Callable[[int], Result]) -> List[Result]:
    """Run *work* for every seed; results come back in seed order."""
    seeds = config.seeds()
    if config.threads == 1 or len(seeds) == 1:
        return [work(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(work, seeds))


def run_render(config: ExperimentConfig) -> Result:
    p = config.params
    spec = config.spec()
    viewport = Viewport(p["center"], p["width"], p["pixels"])
    raster = render_escape(spec, p["m"], viewport, p["horizon"])
    if p["angles"]:
        traces = [trace_ray(spec, p["m"], a, **trace_options(p)) for a in p["angles"]]
        raster = overlay_rays(raster, traces)
    written = save(raster, config.out / config.name, png=p["png"])
    return {
        "artifacts": sorted(path.name for path in written.values()),
        "bounded_pixels": int(raster.bounded.sum()),
        "bounded_area": raster.bounded_area(),
        "metadata": raster.metadata,
    }


def _points(config: ExperimentConfig, evaluate) -> List[Result]:
    p = config.params
    spec = config.spec()
    rows = []
    for z in p["points"]:
        value = evaluate(spec, p["m"], z, p["horizon"])
        if isinstance(value, NotEscaped):
            rows.append({"z": z, "escaped": False, "horizon": value.horizon})
        else:
            rows.append({"z": z, "escaped": True, "value": value})
    return rows


def run_green(config: ExperimentConfig) -> Result:
    return {"points": _points(config, green)}


def run_bottcher(config: ExperimentConfig) -> Result:
    rows = _points(config, bottcher)
    for row in rows:
        if row["escaped"]:
            result = row.pop("value")
            row.update(green=result.green, bottcher=result.bottcher,
                       n_escape=result.n_escape, n_used=result.n_used,
                       residual=result.residual)
    return {"points": rows}


def run_trace_ray(config: ExperimentConfig) -> Result:
    p = config.params
    spec = config.spec()
    rays = []
    for angle in p["angles"]:
        trace = trace_ray(spec, p["m"], angle, **trace_options(p))
        name = f"{config.name}_ray_{pretty_angle(angle).replace('/', '-')}.csv"
        write_trace_csv(trace, config.out / name)
        rays.append({
            "angle": pretty_angle(angle),
            "status": trace.status,
            "points": len(trace.points),
            "landing": trace.landing,
            "landing_radius": trace.landing_radius,
            "subdivisions": trace.subdivisions,
            "csv": name,
        })
    return {"rays": rays}


def run_certify(config: ExperimentConfig) -> Result:
    cert = certify(config.spec(), certify_config(config.params))
    return {"certificate": cert_summary(cert)}


def run_rigidity(config: ExperimentConfig) -> Result:
    p = config.params
    options = trace_options(p)
    cfg = certify_config(p)

    def one(seed: int) -> Result:
        # A failing seed is recorded in its own entry; the other seeds still run
        entry: Result = {"seed": seed, "certificate": None}
        try:
            spec = config.spec(seed)
            entry["certificate"] = cert_summary(certify(spec, cfg))
            check = portrait(spec, p["m"], p["angles"], p["denominators"], p["tol"], **options)
        except DynamicsError as exc:
            logger.warning("Seed %d: %s: %s", seed, type(exc).__name__, exc)
            entry.update(co_land=False, error=type(exc).__name__, message=str(exc))
            return entry
        entry.update(
            co_land=True,
            landing=check.group.landing,
            radius=check.group.radius,
            joined=[pretty_angle(a) for a in check.joined],
            unresolved=[pretty_angle(a) for a in check.unresolved],
            sampled=check.sampled,
            closed=check.closed,
        )
        return entry

    runs = _per_seed(config, one)
    co_landed = sum(1 for r in runs if r["co_land"])
    failed = sum(1 for r in runs if "error" in r)
    logger.info("Rigidity: %d of %d seeds co-land, %d failed", co_landed, len(runs), failed)
    return {
        "angles": [pretty_angle(a) for a in p["angles"]],
        "runs": runs,
        "co_landed": co_landed,
        "closed": sum(1 for r in runs if r.get("closed")),
        "certified": sum(1 for r in runs
                         if r["certificate"] and r["certificate"]["verdict"] == "Pass"),
        "failed": failed,
        "total": len(runs),
    }


def run_motion(config: ExperimentConfig) -> Result:
    p = config.params
    base = config.base_spec()
    cert = certify(base, certify_config(p))
    options = trace_options(p)

    def one(seed: int) -> Result:
        path = ParamPath.tail(base, config.spec(seed), p["path_horizon"], p["steps"])
        report = compare_motions(path, p["m"], p["angles"], p["depth"], cert,
                                 p["tol"], **options)
        return {
            "seed": seed,
            "pairs": report.pairs,
            "max_discrepancy": report.max_discrepancy,
            "agree": report.max_discrepancy <= p["tol"],
            "subdivisions": report.subdivisions,
        }

    runs = _per_seed(config, one)
    return {
        "certificate": cert_summary(cert),
        "depth": p["depth"],
        "runs": runs,
        "agree": sum(1 for r in runs if r["agree"]),
        "total": len(runs),
    }


def run_hausdorff(config: ExperimentConfig) -> Result:
    p = config.params
    base = julia_sample(config.base_spec(), p["m"], horizon=p["horizon"], grid=p["grid"])
    rows = []
    for radius in p["radii"]:
        sample = julia_sample(config.scaled_spec(radius), p["m"],
                              horizon=p["horizon"], grid=p["grid"])
        rows.append({
            "radius": radius,
            "distance": hausdorff_distance(base.points, sample.points),
            "quality": max(base.quality, sample.quality),
        })
    order = sorted(rows, key=lambda r: -r["radius"])
    decreasing = all(a["distance"] > b["distance"] for a, b in zip(order, order[1:]))
    return {"base_quality": base.quality, "distances": rows, "decreasing": decreasing}


def run_conjugate_monic(config: ExperimentConfig) -> Result:
    p = config.params
    spec = config.spec()
    conj = monic_rescale(spec, p["m_max"], p["horizon"], p["tol"])
    monic = conjugate_sequence(spec, conj)
    rng = np.random.default_rng(config.seed)
    R0 = escape_radius(spec.bounds)
    radius = R0 * np.sqrt(rng.uniform(0, 1, p["samples"]))
    points = radius * np.exp(2j * np.pi * rng.uniform(0, 1, p["samples"]))
    leads, residuals = [], []
    for k in range(1, p["m_max"] + 1):
        poly, conjugated = spec.polynomial(k), monic.polynomial(k)
        leads.append(conjugated.lead)
        lhs = conj.chi(k, poly(points))
        rhs = conjugated(conj.chi(k - 1, points))
        residuals.append(float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
    return {
        "horizon": conj.horizon,
        "tail_bound": conj.tail_bound,
        "cut": conj.cut,
        "alphas": conj.alphas[:p["m_max"] + 1],
        "leads": leads,
        "max_lead_error": max(abs(a - 1) for a in leads),
        "max_residual": max(residuals),
    }


TASKS: Dict[str, Callable[[ExperimentConfig], Result]] = {
    "render": run_render,
    "green": run_green,
    "bottcher": run_bottcher,
    "trace-ray": run_trace_ray,
    "certify": run_certify,
    "rigidity": run_rigidity,
    "motion": run_motion,
    "hausdorff": run_hausdorff,
    "conjugate-monic": run_conjugate_monic,
}


def execute(config: ExperimentConfig) -> Result:
    """Run the configured task and return its result."""
    config.out.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s (%s)", config.name, config.task)
    return TASKS[config.task](config)
