"""Rasters of iterated filled Julia sets, potentials and traced rays."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from iterjulia.exceptions import TimeMismatch
from iterjulia.polyseq import SequenceSpec, escape_radius, escape_times
from iterjulia.potential import green_grid
from iterjulia.rays import RayStatus, RayTrace


logger = logging.getLogger(__name__)

#: Default number of iterations before a pixel is labelled bounded
HORIZON = 512

#: Colours of the overlay channel
RAY_COLOUR = (255, 48, 48)
MARKER_COLOUR = (255, 230, 0)

#: Overlay channel codes
OVERLAY_RAY = 1
OVERLAY_MARKER = 2

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Viewport:
    """Rectangle of the plane with square pixels.

    :param center: Complex coordinate of the image centre.
    :param width: Width of the rectangle in the plane.
    :param pixels: ``(width_px, height_px)``.
    """

    center: complex
    width: float
    pixels: Tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "pixels", tuple(int(p) for p in self.pixels))
        if not self.width > 0:
            raise ValueError(f"Viewport width must be positive, got {self.width}")
        if len(self.pixels) != 2 or min(self.pixels) < 1:
            raise ValueError(f"Need at least one pixel in each direction, got {self.pixels}")

    @classmethod
    def square(cls, center: complex, width: float, size: int) -> Viewport:
        return cls(center, width, (size, size))

    @property
    def pixel_size(self) -> float:
        return self.width / self.pixels[0]

    @property
    def height(self) -> float:
        return self.pixel_size * self.pixels[1]

    def grid(self) -> np.ndarray:
        """Pixel centres, shape ``(height_px, width_px)``, first row on top."""
        w, h = self.pixels
        step = self.pixel_size
        x = self.center.real + (np.arange(w) - (w - 1) / 2) * step
        y = self.center.imag - (np.arange(h) - (h - 1) / 2) * step
        return x[np.newaxis, :] + 1j * y[:, np.newaxis]

    def to_pixel(self, z: complex) -> Tuple[int, int]:
        """``(row, column)`` of the pixel containing *z*; may lie outside."""
        w, h = self.pixels
        step = self.pixel_size
        col = math.floor((z.real - self.center.real) / step + w / 2)
        row = math.floor((self.center.imag - z.imag) / step + h / 2)
        return row, col

    def contains(self, row: int, col: int) -> bool:
        return 0 <= row < self.pixels[1] and 0 <= col < self.pixels[0]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "center": [self.center.real, self.center.imag],
            "width": self.width,
            "pixels": list(self.pixels),
        }


@dataclass
class Raster:
    """Rendered image with the classification it was made from.

    ``escape[r, c]`` is the escape time of the pixel centre or ``-1`` for
    pixels that stayed bounded for the whole horizon. ``potential`` holds the
    Green's value where it was computed and ``nan`` elsewhere.
    """

    m: int
    viewport: Viewport
    escape: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)
    rgb: np.ndarray = field(repr=False)
    overlay: np.ndarray = field(repr=False)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def bounded(self) -> np.ndarray:
        return self.escape < 0

    def bounded_area(self) -> float:
        """Area of the bounded pixels in the plane."""
        return float(self.bounded.sum()) * self.viewport.pixel_size ** 2

    def boundary(self) -> np.ndarray:
        """Mask of bounded pixels with an escaping 4-neighbour."""
        b = self.bounded
        edge = np.zeros_like(b)
        edge[1:, :] |= b[1:, :] != b[:-1, :]
        edge[:-1, :] |= b[:-1, :] != b[1:, :]
        edge[:, 1:] |= b[:, 1:] != b[:, :-1]
        edge[:, :-1] |= b[:, :-1] != b[:, 1:]
        return edge & b


def spec_digest(spec: SequenceSpec) -> str:
    """Short stable digest of a sequence description."""
    return hashlib.sha256(repr((spec.rule, spec.bounds)).encode()).hexdigest()[:16]


def _shade(escape: np.ndarray, potential: np.ndarray) -> np.ndarray:
    """Grey levels banded by the level sets ``G = 2^k``; black when bounded."""
    grey = np.zeros(escape.shape)
    smooth = np.isfinite(potential) & (potential > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        level = np.log2(potential[smooth])
    grey[smooth] = 96 + 159 * (0.5 + 0.5 * np.cos(math.pi * level))
    grey[(escape >= 0) & ~smooth] = 64
    grey = np.rint(grey).astype(np.uint8)
    return np.repeat(grey[:, :, np.newaxis], 3, axis=2)


def render_escape(
    spec: SequenceSpec,
    m: int,
    viewport: Viewport,
    horizon: int = HORIZON,
    R0: Optional[float] = None,
) -> Raster:
    """Classify every pixel of *viewport* at time *m* by its escape time.

    Escaping pixels are shaded by the Green's function, bounded pixels are
    black. Bounded means "not escaped within *horizon*"; no interior test is
    made.
    """
    if R0 is None:
        R0 = escape_radius(spec.bounds)
    points = viewport.grid()
    escape = escape_times(spec, m, points, R0, horizon)
    potential = green_grid(spec, m, points, horizon)
    potential[escape < 0] = np.nan
    raster = Raster(
        m, viewport, escape, potential, _shade(escape, potential),
        np.zeros(escape.shape, dtype=np.uint8),
        {
            "spec": spec_digest(spec),
            "m": m,
            "horizon": horizon,
            "R0": R0,
            "viewport": viewport.as_dict(),
            "notes": [],
        },
    )
    logger.info("Rendered time %d on %dx%d pixels, %d bounded",
                m, viewport.pixels[0], viewport.pixels[1], int(raster.bounded.sum()))
    return raster


def _draw_segment(raster: Raster, a: complex, b: complex) -> int:
    vp = raster.viewport
    steps = max(1, int(math.ceil(2 * abs(b - a) / vp.pixel_size)))
    drawn = 0
    for k in range(steps + 1):
        row, col = vp.to_pixel(a + (b - a) * k / steps)
        if vp.contains(row, col):
            raster.overlay[row, col] = max(raster.overlay[row, col], OVERLAY_RAY)
            raster.rgb[row, col] = RAY_COLOUR
            drawn += 1
    return drawn


def _draw_marker(raster: Raster, z: complex) -> int:
    vp = raster.viewport
    row, col = vp.to_pixel(z)
    drawn = 0
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if vp.contains(row + dr, col + dc):
                raster.overlay[row + dr, col + dc] = OVERLAY_MARKER
                raster.rgb[row + dr, col + dc] = MARKER_COLOUR
                drawn += 1
    return drawn


def overlay_rays(raster: Raster, traces: Sequence[RayTrace]) -> Raster:
    """Return a copy of *raster* with the traces drawn in the overlay channel.

    Landed traces get a marker at their landing point. Traces that miss the
    viewport are noted in the metadata.

    :raises TimeMismatch: If a trace belongs to another time index.
    """
    for trace in traces:
        if trace.m != raster.m:
            raise TimeMismatch(raster.m, trace.m)
    out = replace(
        raster,
        rgb=raster.rgb.copy(),
        overlay=raster.overlay.copy(),
        metadata=json.loads(json.dumps(raster.metadata)),
    )
    for trace in traces:
        zs = trace.zs
        drawn = sum(_draw_segment(out, a, b) for a, b in zip(zs[:-1], zs[1:]))
        if trace.status is RayStatus.LANDED:
            if len(zs):
                drawn += _draw_segment(out, zs[-1], trace.landing)
            drawn += _draw_marker(out, trace.landing)
        if not drawn:
            out.metadata.setdefault("notes", []).append(f"{trace} lies outside the viewport")
            logger.debug("%s lies outside the viewport", trace)
    out.metadata["rays"] = [str(t) for t in traces]
    return out


def write_ppm(raster: Raster, path: PathLike) -> Path:
    """Write the colour image as a binary portable pixmap (P6)."""
    path = Path(path)
    h, w = raster.rgb.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(raster.rgb, dtype=np.uint8).tobytes())
    logger.info("Wrote %s", path)
    return path


def read_ppm(path: PathLike) -> np.ndarray:
    """Read back a P6 file written by :func:`write_ppm`."""
    data = Path(path).read_bytes()
    magic, w, h, maxval, body = data.split(maxsplit=4)
    if magic != b"P6" or maxval != b"255":
        raise ValueError(f"{path} is not an 8-bit P6 pixmap")
    return np.frombuffer(body, dtype=np.uint8).reshape(int(h), int(w), 3)


def write_png(raster: Raster, path: PathLike) -> Path:
    """Write the colour image as PNG.

    :raises NotImplementedError: When Pillow is not installed.
    """
    try:
        from PIL import Image
    except ImportError:
        raise NotImplementedError("This feature requires the 'iterjulia[png]' feature")
    path = Path(path)
    Image.fromarray(np.ascontiguousarray(raster.rgb, dtype=np.uint8), "RGB").save(path)
    logger.info("Wrote %s", path)
    return path


def write_sidecar(raster: Raster, image_path: PathLike) -> Path:
    """Write the metadata as JSON next to *image_path*."""
    path = Path(image_path).with_suffix(".json")
    with open(path, "w") as f:
        json.dump(raster.metadata, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def save(raster: Raster, path: PathLike, png: bool = True) -> Dict[str, Path]:
    """Write the P6 image, a PNG when Pillow is available, and the sidecar.

    :param path: Image path; suffixes are replaced.
    """
    path = Path(path)
    written = {"ppm": write_ppm(raster, path.with_suffix(".ppm"))}
    if png:
        try:
            written["png"] = write_png(raster, path.with_suffix(".png"))
        except NotImplementedError:
            logger.warning("Pillow is not installed; skipping %s", path.with_suffix(".png"))
    written["metadata"] = write_sidecar(raster, path)
    return written
