"""Binary rasterization of polygon sets.

The fit transform is rotation-invariant: the drawing is scaled so the
circumradius about its area centroid lands (min(width, height)/2 - margin)
pixels from the image center.  A bounding-box fit would change the fill
fraction as the figure rotates; this rule keeps it constant up to aliasing.
Pixels are filled by an even-odd scanline test at pixel centers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .geometry import PolygonSet, polygon_set_area, polygon_set_centroid

MARGIN_PX = 2.0


@dataclass(frozen=True)
class RasterView:
    width: int
    height: int
    pixels: np.ndarray  # uint8, 0 background / 1 figure, shape (height, width)
    figure_id: int = -1
    angle_steps: int = 0

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixel grid {px.shape} does not match "
                             f"{self.height}x{self.width}")

    @property
    def fill_count(self) -> int:
        return int(self.pixels.sum())

    @property
    def fill_fraction(self) -> float:
        return self.fill_count / (self.width * self.height)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(b"raster:%d:%d:" % (self.width, self.height))
        h.update(self.pixels.tobytes())
        return h.hexdigest()

    def to_pgm(self) -> bytes:
        """P5 grayscale debug dump: 0 background, 255 figure."""
        header = b"P5\n%d %d\n255\n" % (self.width, self.height)
        return header + (self.pixels * 255).astype(np.uint8).tobytes()


def rasterize(polys: PolygonSet, width: int = 64, height: int = 64,
              figure_id: int = -1, angle_steps: int = 0) -> RasterView:
    """Scale, center and fill a polygon set into a binary image."""
    if width < 16 or height < 16:
        raise ValueError("raster size must be at least 16x16")
    if polygon_set_area(polys) < 1e-12:
        raise ValueError("degenerate geometry")
    cx, cy = polygon_set_centroid(polys)
    radius = max(
        math.hypot(x - cx, y - cy) for poly in polys.polygons for x, y in poly
    )
    if radius < 1e-12:
        raise ValueError("degenerate geometry")
    scale = (min(width, height) / 2.0 - MARGIN_PX) / radius
    ox, oy = width / 2.0, height / 2.0

    # edge list in pixel coordinates over every polygon
    edges = []
    for poly in polys.polygons:
        n = len(poly)
        for i in range(n):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % n]
            edges.append((
                ox + (x0 - cx) * scale, oy + (y0 - cy) * scale,
                ox + (x1 - cx) * scale, oy + (y1 - cy) * scale,
            ))
    ex0 = np.array([e[0] for e in edges])
    ey0 = np.array([e[1] for e in edges])
    ex1 = np.array([e[2] for e in edges])
    ey1 = np.array([e[3] for e in edges])

    pixels = np.zeros((height, width), dtype=np.uint8)
    centers_x = np.arange(width) + 0.5
    for row in range(height):
        y = row + 0.5
        # half-open span rule: an edge crosses the scanline when exactly one
        # endpoint lies strictly above it
        crossing = (ey0 > y) != (ey1 > y)
        if not crossing.any():
            continue
        t = (y - ey0[crossing]) / (ey1[crossing] - ey0[crossing])
        xs = np.sort(ex0[crossing] + t * (ex1[crossing] - ex0[crossing]))
        # even-odd: inside between alternating crossings
        for lo, hi in zip(xs[0::2], xs[1::2]):
            pixels[row, (centers_x > lo) & (centers_x < hi)] = 1
    return RasterView(width=width, height=height, pixels=pixels,
                      figure_id=figure_id, angle_steps=angle_steps)
