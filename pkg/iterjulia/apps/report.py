"""Structured reports and CSV ray traces."""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import logging
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from iterjulia.rays import RayTrace


logger = logging.getLogger(__name__)

#: Version of the report layout
REPORT_FORMAT = 1

CSV_COLUMNS = ("t", "re", "im")


def jsonable(obj: Any) -> Any:
    """Convert results to plain JSON types.

    Complex numbers become ``[re, im]``, fractions ``"p/q"``, non-finite
    floats their names.
    """
    if isinstance(obj, Enum):
        return str(obj)
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def _canonical(payload: Dict[str, Any]) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def payload_digest(report: Dict[str, Any]) -> str:
    """SHA-256 of everything in *report* except ``generated`` and ``digest``."""
    payload = {k: v for k, v in report.items() if k not in ("generated", "digest")}
    return hashlib.sha256(_canonical(payload)).hexdigest()


def build_report(task: str, config: Dict[str, Any], result: Dict[str, Any],
                 status: str = "ok") -> Dict[str, Any]:
    """Self-describing report embedding the resolved configuration."""
    report = {
        "format": REPORT_FORMAT,
        "task": task,
        "status": status,
        "config": jsonable(config),
        "result": jsonable(result),
    }
    report["digest"] = payload_digest(report)
    report["generated"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return report


def write_report(report: Dict[str, Any], path) -> Path:
    path = Path(path)
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("Wrote %s report %s", report.get("task"), path)
    return path


def read_report(path) -> Dict[str, Any]:
    with open(path) as f:
        return json.load(f)


def write_trace_csv(trace: RayTrace, path) -> Path:
    """Write the points of *trace* as rows ``t, re, im``."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for p in trace.points:
            writer.writerow((repr(p.potential), repr(p.z.real), repr(p.z.imag)))
    logger.debug("Wrote %d points of %s to %s", len(trace.points), trace, path)
    return path


def read_trace_csv(path) -> List[Tuple[float, complex]]:
    """Read ``(t, z)`` rows written by :func:`write_trace_csv`."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path} does not have columns {', '.join(CSV_COLUMNS)}")
        return [(float(t), complex(float(x), float(y))) for t, x, y in reader]
