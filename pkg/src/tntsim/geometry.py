"""Geometry of the seven classic tangram pieces and figures composed of them.

Coordinates are plain floats in tan units (small-triangle leg = 1).  Angles
are written as integer steps of 45 degrees, 0..7.  Placing a piece applies
mirror, then rotation, then translation, in that order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

Point = tuple[float, float]

SQRT2 = math.sqrt(2.0)

# cos/sin of k*45 degrees; exact at the even steps
_COS = (1.0, SQRT2 / 2, 0.0, -SQRT2 / 2, -1.0, -SQRT2 / 2, 0.0, SQRT2 / 2)
_SIN = (0.0, SQRT2 / 2, 1.0, SQRT2 / 2, 0.0, -SQRT2 / 2, -1.0, -SQRT2 / 2)

COORD_TOL = 1e-9
OVERLAP_TOL = 1e-6


class TanKind(enum.Enum):
    LARGE_TRIANGLE_A = "LargeTriangleA"
    LARGE_TRIANGLE_B = "LargeTriangleB"
    MEDIUM_TRIANGLE = "MediumTriangle"
    SMALL_TRIANGLE_A = "SmallTriangleA"
    SMALL_TRIANGLE_B = "SmallTriangleB"
    SQUARE = "Square"
    PARALLELOGRAM = "Parallelogram"


# Canonical vertices, counterclockwise.  Areas are exactly 2, 2, 1, 0.5,
# 0.5, 1, 1 and sum to 8.
CANONICAL_VERTICES: dict[TanKind, tuple[Point, ...]] = {
    TanKind.LARGE_TRIANGLE_A: ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0)),
    TanKind.LARGE_TRIANGLE_B: ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0)),
    TanKind.MEDIUM_TRIANGLE: ((0.0, 0.0), (SQRT2, 0.0), (0.0, SQRT2)),
    TanKind.SMALL_TRIANGLE_A: ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)),
    TanKind.SMALL_TRIANGLE_B: ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)),
    TanKind.SQUARE: ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)),
    TanKind.PARALLELOGRAM: ((0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (1.0, 1.0)),
}


@dataclass(frozen=True)
class Tan:
    kind: TanKind
    canonical_vertices: tuple[Point, ...]

    @property
    def area(self) -> float:
        return polygon_area(self.canonical_vertices)


def tans_catalog() -> list[Tan]:
    """The seven pieces with their canonical geometry."""
    return [Tan(kind, CANONICAL_VERTICES[kind]) for kind in TanKind]


@dataclass(frozen=True)
class PlacedTan:
    kind: TanKind
    translation: Point = (0.0, 0.0)
    rotation_steps: int = 0
    mirrored: bool = False

    def __post_init__(self):
        if not 0 <= self.rotation_steps < 8:
            raise ValueError(f"rotation_steps must be in [0,8), got {self.rotation_steps}")


@dataclass(frozen=True)
class FigureSpec:
    id: int
    name: str
    pieces: tuple[PlacedTan, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))


@dataclass(frozen=True)
class PolygonSet:
    polygons: tuple[tuple[Point, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "polygons", tuple(tuple(tuple(p) for p in poly) for poly in self.polygons)
        )
        if not self.polygons:
            raise ValueError("empty polygon set")


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


class InvalidFigureError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(report.violations) or "invalid figure")
        self.report = report


def polygon_area(vertices) -> float:
    """Signed shoelace area; positive for counterclockwise order."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


def polygon_centroid(vertices) -> Point:
    """Area centroid (not the vertex mean)."""
    area = polygon_area(vertices)
    if abs(area) < 1e-12:
        raise ValueError("degenerate polygon has no area centroid")
    cx = cy = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    return cx / (6.0 * area), cy / (6.0 * area)


def _segments_properly_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def polygon_is_simple(vertices) -> bool:
    """True when no two non-adjacent edges properly cross."""
    n = len(vertices)
    if n < 3:
        return False
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def clip_convex(subject, clip) -> list[Point]:
    """Sutherland-Hodgman clip of a convex subject against a convex CCW clip
    polygon.  Returns the intersection polygon (possibly empty)."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        inputs, output = output, []
        for j in range(len(inputs)):
            px, py = inputs[j]
            qx, qy = inputs[(j + 1) % len(inputs)]
            side_p = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
            side_q = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
            if side_p >= 0:
                output.append((px, py))
            if (side_p > 0 and side_q < 0) or (side_p < 0 and side_q > 0):
                t = side_p / (side_p - side_q)
                output.append((px + t * (qx - px), py + t * (qy - py)))
    return output


def convex_overlap_area(a, b) -> float:
    """Intersection area of two convex polygons."""
    inter = clip_convex(a, b)
    if len(inter) < 3:
        return 0.0
    return abs(polygon_area(inter))


def transform_tan(placed: PlacedTan) -> tuple[Point, ...]:
    """Canonical vertices through mirror, rotate, translate; stays CCW."""
    pts = list(CANONICAL_VERTICES[placed.kind])
    if placed.mirrored:
        pts = [(-x, y) for x, y in reversed(pts)]
    c, s = _COS[placed.rotation_steps], _SIN[placed.rotation_steps]
    tx, ty = placed.translation
    return tuple((x * c - y * s + tx, x * s + y * c + ty) for x, y in pts)


def validate_figure(spec: FigureSpec) -> ValidationReport:
    """Check the figure invariants; violations are data, not failures."""
    violations = []
    seen = set()
    for piece in spec.pieces:
        if piece.kind in seen:
            violations.append(f"duplicate kind: {piece.kind.value}")
        seen.add(piece.kind)
    if not spec.pieces:
        violations.append("figure has no pieces")
    polys = [transform_tan(p) for p in spec.pieces]
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            overlap = convex_overlap_area(polys[i], polys[j])
            if overlap > OVERLAP_TOL:
                violations.append(
                    f"overlap: {spec.pieces[i].kind.value} and "
                    f"{spec.pieces[j].kind.value} share {overlap:.6g} tan-units^2"
                )
    return ValidationReport(ok=not violations, violations=violations)


def to_polygons(spec: FigureSpec) -> PolygonSet:
    """World-coordinate polygons of a valid figure, one per piece."""
    report = validate_figure(spec)
    if not report.ok:
        raise InvalidFigureError(report)
    return PolygonSet(tuple(transform_tan(p) for p in spec.pieces))


def polygon_set_area(polys: PolygonSet) -> float:
    return sum(abs(polygon_area(p)) for p in polys.polygons)


def polygon_set_centroid(polys: PolygonSet) -> Point:
    """Area-weighted centroid over all member polygons."""
    total = cx = cy = 0.0
    for poly in polys.polygons:
        a = abs(polygon_area(poly))
        if a < 1e-12:
            continue
        px, py = polygon_centroid(poly)
        total += a
        cx += a * px
        cy += a * py
    if total < 1e-12:
        raise ValueError("degenerate geometry")
    return cx / total, cy / total


def rotate_view(polys: PolygonSet, k: int) -> PolygonSet:
    """Rotate every vertex by k*45 degrees about the set's area centroid."""
    if not 0 <= k < 8:
        raise ValueError(f"rotation step must be in [0,8), got {k}")
    if k == 0:
        return polys
    c, s = _COS[k], _SIN[k]
    cx, cy = polygon_set_centroid(polys)
    rotated = tuple(
        tuple((cx + (x - cx) * c - (y - cy) * s, cy + (x - cx) * s + (y - cy) * c) for x, y in poly)
        for poly in polys.polygons
    )
    return PolygonSet(rotated)
