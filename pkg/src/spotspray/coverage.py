"""Per-patch area-coverage planning with a mandatory headland loop.

Both planners share the same structure: a headland ring offset half an
operating width inside the patch contour, straight lanes spaced one width
apart covering the remaining core, and a realized waypoint path that starts
and ends at the patch entry point.  ``classic`` drives the headland loop
first and then serpentines over the lanes; ``optimised`` solves a route
inspection problem on the lane + headland-arc multigraph (duplicate the
cheapest arcs until all node degrees are even, then extract an Eulerian
circuit), which never produces a longer path than the serpentine.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely

from . import geom
from .geom import Point2, Polygon, Polyline

LANE_TOL = 1e-9
MIN_CHORD = 1e-6


class HeadlandUnavailable(geom.GeometryError):
    """Raised when a patch is too thin for a headland ring (misclassified patch)."""


@dataclass(frozen=True)
class Lane:
    """One straight spray pass: a maximal chord of a headland component."""

    a: Point2
    b: Point2
    sa: float  # ring arclength of endpoint a on its headland component
    sb: float
    offset: float  # signed offset along the sweep normal
    component: int

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


@dataclass(frozen=True)
class LaneSet:
    orientation: float
    lanes: Tuple[Lane, ...]


@dataclass(frozen=True)
class CoveragePlan:
    patch_index: int
    method: str  # "classic" | "optimised" | "boustrophedon"
    path: Polyline
    length: float
    lane_count: int
    headland_rings: Tuple[Polyline, ...]
    laneset: LaneSet
    orientation: float

    @property
    def headland(self) -> Optional[Polyline]:
        return self.headland_rings[0] if self.headland_rings else None


@dataclass(frozen=True)
class CoverageMetrics:
    covered_area: float
    gap_area: float
    overlap_area: float
    gap_fraction: float
    patch_area: float  # on the same raster as the other quantities
    cell_size: float


def headland_polygons(patch: Polygon, width: float) -> List[Polygon]:
    """Headland ring regions: the patch offset inward by half the operating
    width, split into components where the offset disconnects."""
    return geom.offset_inward(patch, width / 2.0)


def headland_path(patch: Polygon, width: float) -> List[Polyline]:
    """Closed headland loop(s) for a patch; empty when the patch is thinner
    than the operating width everywhere."""
    return [_ring_polyline(p.vertices) for p in headland_polygons(patch, width)]


def _ring_polyline(v: np.ndarray) -> Polyline:
    return Polyline(np.vstack([v, v[:1]]))


def _lane_offsets(lo: float, hi: float, width: float) -> List[float]:
    """Lane offsets covering [lo, hi]: first lane half a width in, then every
    width; a leftover strip narrower than one width gets an extra lane
    centered on it (overlap is preferred over a gap)."""
    if hi - lo <= LANE_TOL:
        return []
    offsets = []
    c = lo + width / 2.0
    while c + width / 2.0 <= hi + LANE_TOL:
        offsets.append(c)
        c += width
    covered_to = offsets[-1] + width / 2.0 if offsets else lo
    if hi - covered_to > LANE_TOL:
        offsets.append((covered_to + hi) / 2.0)
    return offsets


def generate_lanes(patch: Polygon, headland: Sequence[Polygon], width: float,
                   orientation: float) -> LaneSet:
    """Parallel lanes at spacing `width` covering each headland component's
    core (the region the headland swath leaves uncovered), clipped to the
    component and snapped to its ring."""
    ux, uy = math.cos(orientation), math.sin(orientation)
    nx, ny = -uy, ux
    lanes: List[Lane] = []
    for ci, comp in enumerate(headland):
        cores = geom.offset_inward(comp, width / 2.0)
        if not cores:
            continue
        lo = math.inf
        hi = -math.inf
        for core in cores:
            d = core.vertices[:, 0] * nx + core.vertices[:, 1] * ny
            lo = min(lo, float(d.min()))
            hi = max(hi, float(d.max()))
        for off in _lane_offsets(lo, hi, width):
            for (pa, sa), (pb, sb) in geom.line_polygon_chords(comp, orientation, off):
                if math.hypot(pb.x - pa.x, pb.y - pa.y) < MIN_CHORD:
                    continue
                lanes.append(Lane(pa, pb, sa, sb, off, ci))
    return LaneSet(orientation=orientation, lanes=tuple(lanes))


def _candidate_angles(patch: Polygon) -> List[float]:
    hull = geom.convex_hull(patch.vertices)
    v = hull.vertices
    angles = []
    for i in range(len(v)):
        dx, dy = v[(i + 1) % len(v)] - v[i]
        ang = math.atan2(dy, dx) % math.pi
        if ang > math.pi - 1e-12:
            ang = 0.0
        if all(abs(ang - a) > 1e-9 for a in angles):
            angles.append(ang)
    return sorted(angles)


def select_orientation(patch: Polygon, width: float) -> float:
    """Lane direction minimising the lane count over the candidate directions
    (the patch hull's edge directions); ties by total lane length, then by
    the smallest angle."""
    headland = headland_polygons(patch, width)
    if not headland:
        return 0.0
    best = None
    for ang in _candidate_angles(patch):
        ls = generate_lanes(patch, headland, width, ang)
        count = len(ls.lanes)
        total = sum(l.length for l in ls.lanes)
        key = (count, total, ang)
        if best is None or key < best:
            best = key
    return best[2]


def _arc_dist(total: float, s0: float, s1: float) -> float:
    fwd = (s1 - s0) % total
    return min(fwd, total - fwd)


def _lane_sort_key(lane: Lane, ux: float, uy: float):
    mid_along = 0.5 * ((lane.a.x + lane.b.x) * ux + (lane.a.y + lane.b.y) * uy)
    return (lane.offset, mid_along)


def _classic_circuit(ring: np.ndarray, lanes: List[Lane], anchor_s: float) -> List[Point2]:
    """Headland loop first, then a serpentine over the lanes with headland-arc
    connectors; returns waypoints from the anchor back to the anchor.  `lanes`
    must already be in spatial (offset, along) order."""
    total = geom.ring_cumlen(ring)[-1]
    pts, _ = geom.ring_loop(ring, anchor_s)
    cur_s = anchor_s
    for lane in lanes:
        da = _arc_dist(total, cur_s, lane.sa)
        db = _arc_dist(total, cur_s, lane.sb)
        if da <= db:
            enter_s, exit_pt, exit_s = lane.sa, lane.b, lane.sb
        else:
            enter_s, exit_pt, exit_s = lane.sb, lane.a, lane.sa
        arc_pts, _ = geom.shorter_ring_walk(ring, cur_s, enter_s)
        pts.extend(arc_pts)
        pts.append(exit_pt)
        cur_s = exit_s
    back_pts, _ = geom.shorter_ring_walk(ring, cur_s, anchor_s)
    pts.extend(back_pts)
    return pts


def _merge_ring_nodes(total: float, raw: List[Tuple[float, str, int]]):
    """Cluster ring positions within tolerance into nodes.

    raw: (s, kind, ref) with kind "anchor" or lane endpoint refs.
    Returns (node_s sorted list, assignment dict (kind, ref) -> node id).
    """
    order = sorted(range(len(raw)), key=lambda k: raw[k][0])
    node_s: List[float] = []
    assign: Dict[Tuple[str, int], int] = {}
    for k in order:
        s, kind, ref = raw[k]
        if node_s and s - node_s[-1] <= 1e-9:
            nid = len(node_s) - 1
        else:
            node_s.append(s)
            nid = len(node_s) - 1
        assign[(kind, ref)] = nid
    # wrap-around cluster: last and first may coincide modulo the perimeter
    if len(node_s) > 1 and (node_s[0] + total) - node_s[-1] <= 1e-9:
        last = len(node_s) - 1
        node_s.pop()
        for key, nid in assign.items():
            if nid == last:
                assign[key] = 0
    return node_s, assign


def _euler_circuit(n_nodes: int, edges: List[Tuple[int, int]], start: int) -> List[int]:
    """Hierholzer circuit over an even-degree connected multigraph.

    edges are (u, v) pairs; returns the edge ids in traversal order starting
    from `start`.  Deterministic: adjacency is scanned in edge-id order.
    """
    adj: List[List[Tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for eid, (u, v) in enumerate(edges):
        adj[u].append((eid, v))
        if u != v:
            adj[v].append((eid, u))
    ptr = [0] * n_nodes
    used = [False] * len(edges)
    stack: List[Tuple[int, Optional[int]]] = [(start, None)]
    rev: List[int] = []
    while stack:
        v, eid_in = stack[-1]
        advanced = False
        while ptr[v] < len(adj[v]):
            eid, w = adj[v][ptr[v]]
            ptr[v] += 1
            if not used[eid]:
                used[eid] = True
                stack.append((w, eid))
                advanced = True
                break
        if not advanced:
            stack.pop()
            if eid_in is not None:
                rev.append(eid_in)
    if not all(used):
        raise geom.GeometryError("coverage route graph is not connected")
    rev.reverse()
    return rev


def _optimised_circuit(ring: np.ndarray, lanes: List[Lane], anchor_s: float) -> List[Point2]:
    """Minimum-length closed walk from the anchor traversing every lane and
    every headland arc at least once.  All odd-degree nodes sit on the single
    headland cycle, so the cheapest even-degree augmentation is the cheaper
    of the two alternating odd-gap patterns; the Eulerian circuit of the
    augmented multigraph realizes the walk."""
    cum = geom.ring_cumlen(ring)
    total = float(cum[-1])
    if not lanes:
        pts, _ = geom.ring_loop(ring, anchor_s)
        return pts

    raw: List[Tuple[float, str, int]] = [(anchor_s % total, "anchor", 0)]
    for li, lane in enumerate(lanes):
        raw.append((lane.sa % total, "la", li))
        raw.append((lane.sb % total, "lb", li))
    node_s, assign = _merge_ring_nodes(total, raw)
    m = len(node_s)
    anchor_node = assign[("anchor", 0)]

    # arc k spans node k -> node k+1 (cyclically); length along the ring
    arc_len = [(node_s[(k + 1) % m] - node_s[k]) % total for k in range(m)]
    if m == 1:
        arc_len = [total]

    lane_inc = [0] * m
    for li in range(len(lanes)):
        lane_inc[assign[("la", li)]] += 1
        lane_inc[assign[("lb", li)]] += 1
    odd = [k for k in range(m) if lane_inc[k] % 2 == 1]

    dup: List[int] = []
    if odd:
        # gaps[g] = arcs between odd[g] and odd[g+1]; the two alternating
        # selections are the only parity-correct duplications on a cycle
        gaps: List[List[int]] = []
        for g in range(len(odd)):
            a = odd[g]
            b = odd[(g + 1) % len(odd)]
            arcs = []
            k = a
            while k != b:
                arcs.append(k)
                k = (k + 1) % m
            gaps.append(arcs)
        len_a = sum(arc_len[k] for g in range(0, len(gaps), 2) for k in gaps[g])
        len_b = sum(arc_len[k] for g in range(1, len(gaps), 2) for k in gaps[g])
        chosen = range(0, len(gaps), 2) if len_a <= len_b else range(1, len(gaps), 2)
        for g in chosen:
            dup.extend(gaps[g])

    edges: List[Tuple[int, int]] = []
    kinds: List[Tuple[str, int]] = []
    for k in range(m):
        edges.append((k, (k + 1) % m))
        kinds.append(("arc", k))
    for k in sorted(dup):
        edges.append((k, (k + 1) % m))
        kinds.append(("arc", k))
    for li in range(len(lanes)):
        edges.append((assign[("la", li)], assign[("lb", li)]))
        kinds.append(("lane", li))

    circuit = _euler_circuit(m, edges, anchor_node)

    pts: List[Point2] = [geom.ring_point_at(ring, node_s[anchor_node])]
    cur = anchor_node
    for eid in circuit:
        u, v = edges[eid]
        kind, ref = kinds[eid]
        nxt = v if cur == u else u
        if kind == "lane":
            lane = lanes[ref]
            if cur == assign[("la", ref)]:
                pts.extend([lane.a, lane.b])
                nxt = assign[("lb", ref)]
            else:
                pts.extend([lane.b, lane.a])
                nxt = assign[("la", ref)]
        else:
            k = ref
            if u == v:  # single-node ring: the arc is the whole loop
                walk, _ = geom.ring_loop(ring, node_s[k])
                nxt = cur
            elif cur == k:
                walk, _ = geom.ring_walk(ring, node_s[k], node_s[(k + 1) % m], +1)
                nxt = (k + 1) % m
            else:
                walk, _ = geom.ring_walk(ring, node_s[(k + 1) % m], node_s[k], -1)
                nxt = k
            pts.extend(walk)
        cur = nxt
    return pts


def _chain_components(headland: Sequence[Polygon], entry: Point2):
    """Visit order for multiple headland components: start at the component
    nearest the entry, then greedily chain nearest components; each link is
    the closest-boundary-point chord between consecutive rings."""
    n = len(headland)
    dists = [geom.locate_on_ring(h.vertices, entry)[1] for h in headland]
    order = [int(np.argmin(dists))]
    links = []
    remaining = set(range(n)) - {order[0]}
    while remaining:
        prev = order[-1]
        best = None
        for cand in sorted(remaining):
            pa, pb, d = geom.closest_boundary_points(headland[prev], headland[cand])
            if best is None or d < best[0]:
                best = (d, cand, pa, pb)
        _, cand, pa, pb = best
        s_from, _ = geom.locate_on_ring(headland[prev].vertices, pa)
        s_to, _ = geom.locate_on_ring(headland[cand].vertices, pb)
        links.append((s_from, pa, s_to, pb))
        order.append(cand)
        remaining.discard(cand)
    return order, links


def _plan(patch: Polygon, entry: Point2, width: float, method: str,
          patch_index: int, orientation: Optional[float]) -> CoveragePlan:
    headland = headland_polygons(patch, width)
    if not headland:
        raise HeadlandUnavailable(
            "patch is thinner than the operating width everywhere; no headland fits"
        )
    if orientation is None:
        orientation = select_orientation(patch, width)
    laneset = generate_lanes(patch, headland, width, orientation)
    ux, uy = math.cos(orientation), math.sin(orientation)
    lanes_by_comp: Dict[int, List[Lane]] = defaultdict(list)
    for lane in laneset.lanes:
        lanes_by_comp[lane.component].append(lane)
    for ci in lanes_by_comp:
        lanes_by_comp[ci].sort(key=lambda l: _lane_sort_key(l, ux, uy))

    order, links = _chain_components(headland, entry)
    circuit_fn = _classic_circuit if method == "classic" else _optimised_circuit

    def emit(k: int, anchor_s: float) -> List[Point2]:
        ci = order[k]
        ring = headland[ci].vertices
        pts = circuit_fn(ring, lanes_by_comp.get(ci, []), anchor_s)
        if k + 1 < len(order):
            s_from, p_from, s_to, p_to = links[k]
            out_walk, _ = geom.shorter_ring_walk(ring, anchor_s, s_from)
            pts.extend(out_walk)
            pts.append(p_to)
            pts.extend(emit(k + 1, s_to))
            pts.append(p_from)
            back_walk, _ = geom.shorter_ring_walk(ring, s_from, anchor_s)
            pts.extend(back_walk)
        return pts

    first_ring = headland[order[0]].vertices
    anchor_s, _ = geom.locate_on_ring(first_ring, entry)
    waypoints: List[Point2] = [entry]
    waypoints.extend(emit(0, anchor_s))
    waypoints.append(entry)
    path = Polyline(waypoints)
    return CoveragePlan(
        patch_index=patch_index,
        method=method,
        path=path,
        length=path.length,
        lane_count=len(laneset.lanes),
        headland_rings=tuple(_ring_polyline(h.vertices) for h in headland),
        laneset=laneset,
        orientation=orientation,
    )


def plan_classic(patch: Polygon, entry: Point2, width: float, patch_index: int = 0,
                 orientation: Optional[float] = None) -> CoveragePlan:
    """Headland loop followed by a boustrophedon over the lanes (connectors run
    along the headland); starts and ends at the entry point."""
    return _plan(patch, entry, width, "classic", patch_index, orientation)


def plan_optimised(patch: Polygon, entry: Point2, width: float, patch_index: int = 0,
                   orientation: Optional[float] = None) -> CoveragePlan:
    """Route-inspection coverage: minimum-length closed walk over lanes and
    headland arcs; never longer than the classic plan for the same entry."""
    return _plan(patch, entry, width, "optimised", patch_index, orientation)


def plan_boustrophedon_reference(patch: Polygon, width: float,
                                 orientation: float = 0.0,
                                 patch_index: int = 0) -> CoveragePlan:
    """Headland-free zigzag across the raw patch.

    Demonstration-only: reproduces the characteristic boundary coverage gaps
    of plain back-and-forth sweeps; never used by the mission pipeline.
    """
    ux, uy = math.cos(orientation), math.sin(orientation)
    nx, ny = -uy, ux
    d = patch.vertices[:, 0] * nx + patch.vertices[:, 1] * ny
    lanes: List[Lane] = []
    for off in _lane_offsets(float(d.min()), float(d.max()), width):
        for (pa, sa), (pb, sb) in geom.line_polygon_chords(patch, orientation, off):
            if math.hypot(pb.x - pa.x, pb.y - pa.y) < MIN_CHORD:
                continue
            lanes.append(Lane(pa, pb, sa, sb, off, 0))
    if not lanes:
        raise HeadlandUnavailable("patch admits no boustrophedon lane")
    laneset = LaneSet(orientation=orientation, lanes=tuple(lanes))
    pts: List[Point2] = []
    cur: Optional[Point2] = None
    for lane in sorted(lanes, key=lambda l: _lane_sort_key(l, ux, uy)):
        if cur is None:
            start, end = (lane.a, lane.b) if (lane.a.x, lane.a.y) <= (lane.b.x, lane.b.y) else (lane.b, lane.a)
        else:
            da = math.hypot(lane.a.x - cur.x, lane.a.y - cur.y)
            db = math.hypot(lane.b.x - cur.x, lane.b.y - cur.y)
            start, end = (lane.a, lane.b) if da <= db else (lane.b, lane.a)
        pts.extend([start, end])
        cur = end
    path = Polyline(pts)
    return CoveragePlan(
        patch_index=patch_index,
        method="boustrophedon",
        path=path,
        length=path.length,
        lane_count=len(lanes),
        headland_rings=(),
        laneset=laneset,
        orientation=orientation,
    )


def _dists_to_segment(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    e = float(d @ d)
    if e == 0.0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    t = np.clip(((pts - a) @ d) / e, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


def coverage_metrics(plan, patch: Polygon, width: float,
                     cell: Optional[float] = None) -> CoverageMetrics:
    """Raster coverage quality of a plan (or bare path) over a patch.

    The swath is the path buffered by half the operating width with mitred
    joins (the boom sweeps the full band through a turn, so a headland ring
    offset by W/2 sits flush with the patch boundary) and flat end caps.
    Covered and gap areas are complementary on the raster by construction;
    overlap counts cells swept by more than one distinct pass (consecutive
    path segments through a cell count as a single pass).  Exact within
    about two cells' area at the default resolution min(W/20, 0.1 m).
    """
    if cell is None:
        cell = min(width / 20.0, 0.1)
    path = plan.path if isinstance(plan, CoveragePlan) else plan
    x0, y0, x1, y1 = patch.bounds
    nx = max(1, int(math.ceil((x1 - x0) / cell)))
    ny = max(1, int(math.ceil((y1 - y0) / cell)))
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = geom.points_in_polygon_mask(pts, patch)
    pts_in = pts[inside]
    cell_area = cell * cell
    patch_area = float(inside.sum()) * cell_area
    if path is None or len(pts_in) == 0:
        return CoverageMetrics(0.0, patch_area, 0.0, 1.0 if patch_area > 0 else 0.0,
                               patch_area, cell)
    half = width / 2.0
    wp = path.waypoints
    # Buffer overlapping two-segment pieces rather than the whole polyline:
    # GEOS drops interior area near doubling-back vertices of self-revisiting
    # paths, while the piecewise union keeps every segment band and every
    # turn's mitre wedge.
    pieces = []
    if len(wp) == 2:
        pieces.append(shapely.LineString(wp).buffer(
            half, cap_style="flat", join_style="mitre", mitre_limit=5.0))
    else:
        for k in range(len(wp) - 2):
            pieces.append(shapely.LineString(wp[k:k + 3]).buffer(
                half, cap_style="flat", join_style="mitre", mitre_limit=5.0))
    swath = shapely.unary_union(pieces)
    covered = shapely.intersects_xy(swath, pts_in[:, 0], pts_in[:, 1])
    # pass counting stays segment-based: a cell belongs to one pass while
    # consecutive segments sweep it, to a second pass when the path returns
    runs = np.zeros(len(pts_in), dtype=np.int32)
    prev = np.zeros(len(pts_in), dtype=bool)
    for k in range(len(wp) - 1):
        mask = _dists_to_segment(pts_in, wp[k], wp[k + 1]) <= half
        runs += (mask & ~prev).astype(np.int32)
        prev = mask
    covered_area = float(covered.sum()) * cell_area
    gap_area = float((inside.sum() - covered.sum())) * cell_area
    overlap_area = float(np.clip(runs - 1, 0, None).sum()) * cell_area
    gap_fraction = gap_area / patch_area if patch_area > 0 else 0.0
    return CoverageMetrics(covered_area, gap_area, overlap_area, gap_fraction,
                           patch_area, cell)
