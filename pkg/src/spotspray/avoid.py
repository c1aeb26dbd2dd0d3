"""Obstacle avoidance and field containment for transit segments.

Obstacles are replaced by their convex hulls (a shortest path around an
obstacle follows the hull, never the raw contour).  The default "tangent"
method reroutes a crossing segment along the shorter of the two hull-
boundary chains between the tangent points, which is the global shortest
path around a single convex obstacle.  The alternative "contour" method
flies straight at the obstacle and follows its contour until the target is
in line of sight; it is kept for comparison and is never shorter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import geom
from .geom import Point2, Polygon, Polyline


class InfeasibleEndpointError(geom.GeometryError):
    """A detour endpoint lies strictly inside an obstacle hull."""

    def __init__(self, which: str, obstacle_index: int):
        self.obstacle_index = obstacle_index
        super().__init__(f"{which} endpoint lies inside obstacle hull {obstacle_index}")


class DetourDivergedError(geom.GeometryError):
    """The iterative multi-hull rerouting did not settle within its bound."""


@dataclass(frozen=True)
class ObstacleHull:
    original: Polygon
    hull: Polygon
    inflation: float = 0.0

    @classmethod
    def build(cls, obstacle: Polygon, inflation: float = 0.0) -> "ObstacleHull":
        hull = geom.convex_hull(obstacle.vertices)
        if inflation > 0.0:
            grown = hull.as_shapely().buffer(inflation, join_style="mitre", mitre_limit=5.0)
            hull = geom.convex_hull(np.asarray(grown.exterior.coords)[:-1])
        return cls(original=obstacle, hull=hull, inflation=inflation)


def _dist(a, b) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def _segment_enters(a, b, poly: Polygon) -> List[float]:
    """Crossing parameters where segment ab enters/leaves the hull interior."""
    if _dist(a, b) < 1e-12:
        return []
    return geom.segment_clips_polygon(a, b, poly)


def _chain_lengths(pts: Sequence[Point2]) -> float:
    return sum(_dist(pts[k], pts[k + 1]) for k in range(len(pts) - 1))


def _tangent_chain(a: Point2, b: Point2, hull: Polygon) -> List[Point2]:
    """Shorter boundary chain of conv({a, b} + hull vertices) between a and b."""
    combined = geom.convex_hull(
        [(a[0], a[1]), (b[0], b[1])] + [tuple(v) for v in hull.vertices]
    )
    ring = combined.vertices
    sa, da = geom.locate_on_ring(ring, a)
    sb, db = geom.locate_on_ring(ring, b)
    if da > 1e-6 or db > 1e-6:
        raise geom.GeometryError("detour endpoints fell off the combined hull")
    fwd, lf = geom.ring_walk(ring, sa, sb, +1)
    bwd, lb = geom.ring_walk(ring, sa, sb, -1)
    pts = fwd if lf <= lb else bwd
    pts[0] = Point2(a[0], a[1])
    pts[-1] = Point2(b[0], b[1])
    return pts


def _contour_chain(a: Point2, b: Point2, hull: Polygon) -> List[Point2]:
    """Fly straight until the hull is hit, then follow its contour until b is
    visible; the exit leg coincides with the tangent method's."""
    ts = _segment_enters(a, b, hull)
    if not ts:
        return [a, b]
    hit = Point2(a[0] + ts[0] * (b[0] - a[0]), a[1] + ts[0] * (b[1] - a[1]))
    v = hull.vertices
    cum = geom.ring_cumlen(v)
    s_hit, _ = geom.locate_on_ring(v, hit)
    n = len(v)
    best: Optional[Tuple[float, List[Point2]]] = None
    for direction in (+1, -1):
        pts: List[Point2] = [hit]
        walked = 0.0
        # vertex indices in walking order from the hit point
        rel = (cum[:-1] - s_hit) % cum[-1] if direction > 0 else (s_hit - cum[:-1]) % cum[-1]
        order = [int(i) for i in np.argsort(rel, kind="stable") if rel[i] > 1e-9]
        cur = hit
        ok = False
        for idx in order:
            vert = Point2(float(v[idx, 0]), float(v[idx, 1]))
            walked += _dist(cur, vert)
            pts.append(vert)
            cur = vert
            if not _segment_enters(vert, b, hull):
                ok = True
                break
        if ok:
            total = walked + _dist(cur, b)
            if best is None or total < best[0]:
                best = (total, pts)
    if best is None:
        raise geom.GeometryError("contour walk found no line of sight to the target")
    return [a] + best[1] + [b]


def detour_segment(p, q, hulls: Sequence[ObstacleHull], method: str = "tangent") -> Polyline:
    """Reroute segment pq around every hull it crosses.

    Hulls are processed in along-path crossing order; rerouting repeats until
    no segment of the path crosses any hull interior (bounded by 4x the hull
    count, raising DetourDivergedError beyond that).  Endpoints strictly
    inside a hull are an error.
    """
    p = Point2(float(p[0]), float(p[1]))
    q = Point2(float(q[0]), float(q[1]))
    for k, h in enumerate(hulls):
        if geom.point_in_polygon(p, h.hull) == "inside":
            raise InfeasibleEndpointError("start", k)
        if geom.point_in_polygon(q, h.hull) == "inside":
            raise InfeasibleEndpointError("end", k)
    pts: List[Point2] = [p, q]
    if not hulls:
        return Polyline(pts)
    max_rounds = 4 * len(hulls) + 4
    for _ in range(max_rounds):
        changed = False
        k = 0
        while k < len(pts) - 1:
            a, b = pts[k], pts[k + 1]
            first: Optional[Tuple[float, int]] = None
            for hi, h in enumerate(hulls):
                ts = _segment_enters(a, b, h.hull)
                if ts and (first is None or ts[0] < first[0]):
                    first = (ts[0], hi)
            if first is None:
                k += 1
                continue
            hull = hulls[first[1]].hull
            chain = _tangent_chain(a, b, hull) if method == "tangent" else _contour_chain(a, b, hull)
            pts[k:k + 2] = chain
            changed = True
            k += max(1, len(chain) - 2)
        if not changed:
            return Polyline(pts)
    raise DetourDivergedError("obstacle rerouting did not converge; check hull layout")


def contain_in_field(path: Polyline, field: Polygon) -> Polyline:
    """Reroute every path portion that exits the field along the field
    boundary (shorter direction).  Idempotent; boundary contact is allowed."""
    wp = path.waypoints
    for which, pt in (("start", wp[0]), ("end", wp[-1])):
        if geom.point_in_polygon(pt, field) == "outside":
            raise geom.GeometryError(f"path {which} point lies outside the field")
    ring = field.vertices
    out: List[Point2] = [Point2(float(wp[0][0]), float(wp[0][1]))]
    for k in range(len(wp) - 1):
        a = Point2(float(wp[k][0]), float(wp[k][1]))
        b = Point2(float(wp[k + 1][0]), float(wp[k + 1][1]))
        ts = geom.segment_clips_polygon(a, b, field) if _dist(a, b) > 1e-12 else []
        if not ts:
            out.append(b)
            continue
        stations = [0.0] + ts + [1.0]
        for i in range(len(stations) - 1):
            lo, hi = stations[i], stations[i + 1]
            mid = Point2(a[0] + 0.5 * (lo + hi) * (b[0] - a[0]),
                         a[1] + 0.5 * (lo + hi) * (b[1] - a[1]))
            seg_start = Point2(a[0] + lo * (b[0] - a[0]), a[1] + lo * (b[1] - a[1]))
            seg_end = Point2(a[0] + hi * (b[0] - a[0]), a[1] + hi * (b[1] - a[1]))
            if geom.point_in_polygon(mid, field) == "outside":
                s0, _ = geom.locate_on_ring(ring, seg_start)
                s1, _ = geom.locate_on_ring(ring, seg_end)
                walk, _ = geom.shorter_ring_walk(ring, s0, s1)
                out.extend(walk)
            else:
                out.append(seg_end)
    return Polyline(out)
