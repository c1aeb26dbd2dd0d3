"""Planar computational-geometry primitives shared by the planner modules.

Everything works in a local east/north metric frame.  Polygons are
normalised on construction (counter-clockwise, deduplicated, simple,
canonical start vertex) so that downstream tie-breaking is deterministic.
All functions are pure.
"""

from __future__ import annotations

import math
from typing import Iterable, List, NamedTuple, Tuple

import numpy as np
import shapely
import shapely.validation
from shapely.geometry import Polygon as _ShapelyPolygon

from ._core import kernels

# Tolerances (meters unless noted)
BOUNDARY_TOL = 1e-9
DEDUPE_TOL = 1e-6
PARALLEL_TOL = 1e-9  # dimensionless, on the normalised cross product


class GeometryError(ValueError):
    """Base class for geometry failures."""


class DegenerateInputError(GeometryError):
    """Raised for inputs without enough geometric content (collinear, too few points)."""


class PolygonValidityError(GeometryError):
    """Raised when a polygon is self-intersecting or has no area."""


class PolygonOverlapError(GeometryError):
    """Raised when an operation requires disjoint polygons but they touch or overlap."""


class Point2(NamedTuple):
    x: float
    y: float


def _as_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected an (n, 2) coordinate array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("coordinates must be finite (no NaN/inf)")
    return arr


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class Polygon:
    """Simple polygon with CCW orientation and a canonical start vertex.

    The vertex list is implicitly closed.  Construction validates the
    invariants: >= 3 vertices after deduplication, strictly positive area,
    no self-intersection.
    """

    __slots__ = ("vertices", "_area", "_perimeter")

    def __init__(self, points):
        v = _as_array(points)
        # drop explicit closing vertex and near-duplicate consecutive vertices
        keep = [0]
        for i in range(1, len(v)):
            if np.hypot(*(v[i] - v[keep[-1]])) >= DEDUPE_TOL:
                keep.append(i)
        while len(keep) > 1 and np.hypot(*(v[keep[-1]] - v[keep[0]])) < DEDUPE_TOL:
            keep.pop()
        v = v[keep]
        if len(v) < 3:
            raise DegenerateInputError("polygon needs at least 3 distinct vertices")
        area = _signed_area(v)
        if abs(area) < 1e-12:
            raise PolygonValidityError("polygon area is zero")
        if area < 0.0:
            v = v[::-1].copy()
        sp = _ShapelyPolygon(v)
        if not sp.is_valid:
            raise PolygonValidityError(
                f"polygon is not simple: {shapely.validation.explain_validity(sp)}"
            )
        start = int(np.lexsort((v[:, 1], v[:, 0]))[0])
        self.vertices = np.ascontiguousarray(np.roll(v, -start, axis=0))
        self._area = abs(area)
        self._perimeter = float(np.sum(np.hypot(*(np.roll(self.vertices, -1, axis=0) - self.vertices).T)))

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({len(self.vertices)} vertices, area={self._area:.3f})"

    @property
    def area(self) -> float:
        return self._area

    @property
    def perimeter(self) -> float:
        return self._perimeter

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        v = self.vertices
        return (float(v[:, 0].min()), float(v[:, 1].min()),
                float(v[:, 0].max()), float(v[:, 1].max()))

    @property
    def centroid(self) -> Point2:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        cx = float(((x + xn) * cross).sum() / (6.0 * a))
        cy = float(((y + yn) * cross).sum() / (6.0 * a))
        return Point2(cx, cy)

    def segments(self) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        v = self.vertices
        for i in range(len(v)):
            yield v[i], v[(i + 1) % len(v)]

    def as_shapely(self) -> _ShapelyPolygon:
        return _ShapelyPolygon(self.vertices)

    @classmethod
    def from_shapely(cls, sp: _ShapelyPolygon) -> "Polygon":
        return cls(np.asarray(sp.exterior.coords)[:-1])


class Polyline:
    """Open or closed waypoint path; consecutive waypoints are distinct."""

    __slots__ = ("waypoints", "_length")

    def __init__(self, points):
        v = _as_array(points)
        keep = [0]
        for i in range(1, len(v)):
            if np.hypot(*(v[i] - v[keep[-1]])) > 1e-12:
                keep.append(i)
        v = v[keep]
        if len(v) < 2:
            raise DegenerateInputError("polyline needs at least 2 distinct waypoints")
        self.waypoints = np.ascontiguousarray(v)
        self._length = float(np.sum(np.hypot(*(v[1:] - v[:-1]).T)))

    def __len__(self) -> int:
        return len(self.waypoints)

    def __repr__(self) -> str:
        return f"Polyline({len(self.waypoints)} waypoints, length={self._length:.3f})"

    @property
    def length(self) -> float:
        return self._length

    @property
    def is_closed(self) -> bool:
        return bool(np.hypot(*(self.waypoints[-1] - self.waypoints[0])) < BOUNDARY_TOL)


def convex_hull(points) -> Polygon:
    """Minimal convex polygon containing the input points (CCW, monotone chain).

    Raises DegenerateInputError when fewer than 3 points or all collinear.
    """
    arr = _as_array(points)
    pts = sorted({(float(x), float(y)) for x, y in arr})
    if len(pts) < 3:
        raise DegenerateInputError("convex hull needs at least 3 distinct points")

    def half(seq):
        chain: List[Tuple[float, float]] = []
        for p in seq:
            while len(chain) > 1:
                ox, oy = chain[-2]
                ax, ay = chain[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInputError("points are collinear; hull is degenerate")
    return Polygon(hull)


def offset_inward(poly: Polygon, d: float) -> List[Polygon]:
    """Inward offset contour(s) at distance d (mitred joins).

    Returns an empty list when the polygon is thinner than 2d everywhere;
    splits into several contours when the offset disconnects.  Components
    are ordered by descending area.
    """
    if d <= 0.0:
        raise GeometryError("offset distance must be positive")
    shrunk = poly.as_shapely().buffer(-d, join_style="mitre", mitre_limit=5.0)
    parts = []
    if shrunk.is_empty:
        return parts
    geoms = shrunk.geoms if shrunk.geom_type.startswith("Multi") else [shrunk]
    for g in geoms:
        if g.geom_type != "Polygon" or g.area < 1e-8:
            continue
        parts.append(Polygon.from_shapely(g))
    parts.sort(key=lambda p: -p.area)
    return parts


def _polygons_touch_or_overlap(a: Polygon, b: Polygon, dist: float) -> bool:
    if dist < BOUNDARY_TOL:
        return True
    # disjoint boundaries can still mean containment
    if point_in_polygon(Point2(*b.vertices[0]), a) == "inside":
        return True
    if point_in_polygon(Point2(*a.vertices[0]), b) == "inside":
        return True
    return False


def closest_boundary_points(a: Polygon, b: Polygon) -> Tuple[Point2, Point2, float]:
    """Boundary points of a and b realizing the minimum boundary distance.

    Ties are broken by the scan order: lowest segment index of `a`, then of
    `b`, then lowest parameter along the segment.  Raises
    PolygonOverlapError for touching/overlapping/nested polygons.
    """
    d, ax, ay, bx, by = kernels.polygon_pair_closest(a.vertices, b.vertices)
    if _polygons_touch_or_overlap(a, b, d):
        raise PolygonOverlapError("polygons touch, overlap or nest; boundary distance is ambiguous")
    return Point2(ax, ay), Point2(bx, by), float(d)


def closest_point_on_polygon(p: Point2, poly: Polygon) -> Tuple[Point2, float]:
    """Nearest boundary point of `poly` to `p` and its distance."""
    d, bx, by = kernels.point_polygon_closest(p[0], p[1], poly.vertices)
    return Point2(bx, by), float(d)


def point_in_polygon(p, poly: Polygon) -> str:
    """Classify a point as "inside", "boundary" or "outside" (tolerance 1e-9 m)."""
    px, py = float(p[0]), float(p[1])
    d, _, _ = kernels.point_polygon_closest(px, py, poly.vertices)
    if d <= BOUNDARY_TOL:
        return "boundary"
    v = poly.vertices
    n = len(v)
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = v[i]
        xj, yj = v[j]
        if (yi > py) != (yj > py) and px < (xj - xi) * (py - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return "inside" if inside else "outside"


def points_in_polygon_mask(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorised even-odd containment test (no boundary class) for rasters."""
    pts = np.asarray(points, dtype=np.float64)
    px, py = pts[:, 0], pts[:, 1]
    v = poly.vertices
    inside = np.zeros(len(pts), dtype=bool)
    j = len(v) - 1
    for i in range(len(v)):
        xi, yi = v[i]
        xj, yj = v[j]
        cond = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = (xj - xi) * (py - yi) / (yj - yi) + xi
        inside ^= cond & (px < xcross)
        j = i
    return inside


def segments_parallel(a1, a2, b1, b2, tol: float = PARALLEL_TOL) -> bool:
    """True iff |cross(a2-a1, b2-b1)| <= tol * |a2-a1| * |b2-b1|."""
    ux, uy = a2[0] - a1[0], a2[1] - a1[1]
    vx, vy = b2[0] - b1[0], b2[1] - b1[1]
    cr = ux * vy - uy * vx
    return abs(cr) <= tol * math.hypot(ux, uy) * math.hypot(vx, vy)


def segment_clips_polygon(p, q, poly: Polygon) -> List[float]:
    """Parameters t in (0,1) where segment pq crosses the polygon boundary.

    Grazing a vertex or running along an edge without entering the interior
    is not a crossing.  Endpoints on the boundary do not count as crossings
    themselves; a crossing is any transition between strict interior and
    exterior.
    """
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    rx, ry = qx - px, qy - py
    seg_len = math.hypot(rx, ry)
    if seg_len == 0.0:
        raise GeometryError("segment endpoints must differ")
    v = poly.vertices
    n = len(v)
    t_tol = BOUNDARY_TOL / seg_len
    cands: List[float] = []
    for i in range(n):
        e1 = v[i]
        e2 = v[(i + 1) % n]
        sx, sy = e2[0] - e1[0], e2[1] - e1[1]
        denom = rx * sy - ry * sx
        wx, wy = e1[0] - px, e1[1] - py
        if abs(denom) > 1e-15 * seg_len * math.hypot(sx, sy):
            t = (wx * sy - wy * sx) / denom
            u = (wx * ry - wy * rx) / denom
            if -t_tol <= t <= 1.0 + t_tol and -1e-9 <= u <= 1.0 + 1e-9:
                cands.append(min(1.0, max(0.0, t)))
        else:
            # parallel: collinear overlap contributes its end parameters
            if abs(wx * ry - wy * rx) <= BOUNDARY_TOL * seg_len:
                for ex, ey in (e1, e2):
                    t = ((ex - px) * rx + (ey - py) * ry) / (seg_len * seg_len)
                    if -t_tol <= t <= 1.0 + t_tol:
                        cands.append(min(1.0, max(0.0, t)))
    if not cands:
        return []
    cands = sorted(set(cands))
    merged = [cands[0]]
    for t in cands[1:]:
        if t - merged[-1] > t_tol:
            merged.append(t)
    # classify the open intervals between candidates
    stations = [0.0] + merged + [1.0]
    statuses = []
    for a, b in zip(stations[:-1], stations[1:]):
        if b - a <= t_tol:
            statuses.append(None)  # zero-length interval, inherit later
            continue
        m = 0.5 * (a + b)
        cls = point_in_polygon(Point2(px + m * rx, py + m * ry), poly)
        statuses.append(cls == "inside")
    # inherit zero-length interval status from the left
    for k in range(len(statuses)):
        if statuses[k] is None:
            statuses[k] = statuses[k - 1] if k > 0 else False
    out = []
    for k, t in enumerate(merged):
        if statuses[k] != statuses[k + 1] and t_tol < t < 1.0 - t_tol:
            out.append(t)
    return out


def convex_min_width(poly: Polygon) -> float:
    """Minimum width of a convex polygon: the smallest gap between parallel
    supporting lines, found as min over edges of the farthest vertex distance."""
    v = poly.vertices
    n = len(v)
    best = math.inf
    for i in range(n):
        ex, ey = v[(i + 1) % n] - v[i]
        elen = math.hypot(ex, ey)
        if elen < 1e-12:
            continue
        nx, ny = -ey / elen, ex / elen
        d = (v[:, 0] - v[i, 0]) * nx + (v[:, 1] - v[i, 1]) * ny
        width = float(np.max(np.abs(d)))
        best = min(best, width)
    return best


# ---------------------------------------------------------------------------
# Closed-ring walking (used for headland arcs, field containment, hull chains)
# ---------------------------------------------------------------------------

def ring_cumlen(v: np.ndarray) -> np.ndarray:
    """Cumulative arclength at each vertex of a closed ring; last entry is the perimeter."""
    d = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
    return np.concatenate(([0.0], np.cumsum(d)))


def locate_on_ring(v: np.ndarray, p) -> Tuple[float, float]:
    """Arclength position of the nearest ring point to `p`; returns (s, distance)."""
    px, py = float(p[0]), float(p[1])
    cum = ring_cumlen(v)
    n = len(v)
    best_d2 = math.inf
    best_s = 0.0
    for j in range(n):
        ax, ay = v[j]
        bx, by = v[(j + 1) % n]
        dx, dy = bx - ax, by - ay
        e = dx * dx + dy * dy
        if e == 0.0:
            continue
        t = ((px - ax) * dx + (py - ay) * dy) / e
        t = min(1.0, max(0.0, t))
        cx, cy = ax + t * dx, ay + t * dy
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best_s = cum[j] + t * math.sqrt(e)
    total = cum[-1]
    if best_s >= total:
        best_s -= total
    return best_s, math.sqrt(best_d2)


def ring_point_at(v: np.ndarray, s: float) -> Point2:
    """Point at arclength s along the ring (s taken modulo the perimeter)."""
    cum = ring_cumlen(v)
    total = cum[-1]
    s = s % total
    j = int(np.searchsorted(cum, s, side="right") - 1)
    j = min(j, len(v) - 1)
    seg_len = cum[j + 1] - cum[j]
    t = 0.0 if seg_len == 0.0 else (s - cum[j]) / seg_len
    a = v[j]
    b = v[(j + 1) % len(v)]
    return Point2(float(a[0] + t * (b[0] - a[0])), float(a[1] + t * (b[1] - a[1])))


def ring_walk(v: np.ndarray, s0: float, s1: float, direction: int) -> Tuple[List[Point2], float]:
    """Waypoints along the ring from arclength s0 to s1 in the given direction
    (+1 follows vertex order, -1 opposes it).  Returns (points, walked length)."""
    cum = ring_cumlen(v)
    total = cum[-1]
    s0 %= total
    s1 %= total
    if direction >= 0:
        dist = (s1 - s0) % total
    else:
        dist = (s0 - s1) % total
    pts = [ring_point_at(v, s0)]
    if dist > 0.0:
        # interior vertices strictly between s0 and s1 in walk order
        verts = cum[:-1]
        if direction >= 0:
            rel = (verts - s0) % total
        else:
            rel = (s0 - verts) % total
        order = np.argsort(rel, kind="stable")
        for idx in order:
            r = rel[idx]
            if 1e-9 < r < dist - 1e-9:
                pts.append(Point2(float(v[idx, 0]), float(v[idx, 1])))
        pts.append(ring_point_at(v, s1))
    return pts, dist


def ring_loop(v: np.ndarray, s0: float) -> Tuple[List[Point2], float]:
    """Full loop around the ring starting and ending at arclength s0, following
    vertex order. Returns (points, perimeter)."""
    cum = ring_cumlen(v)
    total = cum[-1]
    s0 %= total
    start = ring_point_at(v, s0)
    pts = [start]
    rel = (cum[:-1] - s0) % total
    order = np.argsort(rel, kind="stable")
    for idx in order:
        if 1e-9 < rel[idx] < total - 1e-9:
            pts.append(Point2(float(v[idx, 0]), float(v[idx, 1])))
    pts.append(start)
    return pts, total


def shorter_ring_walk(v: np.ndarray, s0: float, s1: float) -> Tuple[List[Point2], float]:
    """Ring walk between two arclength positions taking the shorter direction
    (ties go forward)."""
    total = ring_cumlen(v)[-1]
    fwd = (s1 - s0) % total
    bwd = total - fwd if fwd > 0.0 else 0.0
    if fwd <= bwd:
        return ring_walk(v, s0, s1, +1)
    return ring_walk(v, s0, s1, -1)


def line_polygon_chords(poly: Polygon, angle: float, offset: float):
    """Maximal chords of `poly` cut by the line {x : dot(x, n) = offset},
    where n is the unit normal of direction `angle`.

    Returns a list of ((Point2, s_ring_start), (Point2, s_ring_end)) pairs
    ordered along the line direction; s_ring values are ring arclengths of
    the chord endpoints (for headland-arc bookkeeping).
    """
    ux, uy = math.cos(angle), math.sin(angle)
    nx, ny = -uy, ux
    v = poly.vertices
    n = len(v)
    cum = ring_cumlen(v)
    f = v[:, 0] * nx + v[:, 1] * ny - offset
    cands = []  # (s_along_line, x, y, ring_s)
    for i in range(n):
        j = (i + 1) % n
        fi, fj = f[i], f[j]
        if fi == 0.0 and fj == 0.0:
            # edge lies on the line: both endpoints are candidates
            for k in (i, j):
                x, y = v[k]
                cands.append((x * ux + y * uy, x, y, cum[k]))
            continue
        if (fi > 0.0) == (fj > 0.0) and fi != 0.0 and fj != 0.0:
            continue
        t = fi / (fi - fj)
        x = v[i, 0] + t * (v[j, 0] - v[i, 0])
        y = v[i, 1] + t * (v[j, 1] - v[i, 1])
        seg_len = cum[i + 1] - cum[i]
        cands.append((x * ux + y * uy, x, y, cum[i] + t * seg_len))
    if not cands:
        return []
    cands.sort(key=lambda c: c[0])
    merged = [cands[0]]
    for c in cands[1:]:
        if c[0] - merged[-1][0] > 1e-9:
            merged.append(c)
    chords = []
    for a, b in zip(merged[:-1], merged[1:]):
        mx = 0.5 * (a[1] + b[1])
        my = 0.5 * (a[2] + b[2])
        if point_in_polygon(Point2(mx, my), poly) == "inside":
            chords.append(((Point2(a[1], a[2]), float(a[3])), (Point2(b[1], b[2]), float(b[3]))))
    return chords
