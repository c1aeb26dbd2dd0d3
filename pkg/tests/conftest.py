"""Shared fixtures and independent oracle helpers for the test suite."""

import itertools
import math
from pathlib import Path

import numpy as np

from spotspray import geom
from spotspray.coverage import CoveragePlan
from spotspray.geom import Point2, Polygon

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEMO_INSTANCE = DATA_DIR / "demo_field.geojson"


# ---------------------------------------------------------------------------
# geometry construction helpers
# ---------------------------------------------------------------------------

def rotrect(cx, cy, w, h, deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    pts = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
    return [(cx + c * x - s * y, cy + s * x + c * y) for x, y in pts]


def random_convex_polygon(rng, n, radius, cx=0.0, cy=0.0):
    """Convex polygon: convex hull of n random points on a wobbly circle."""
    angles = np.sort(rng.uniform(0.0, 2 * math.pi, n))
    radii = radius * rng.uniform(0.6, 1.0, n)
    pts = np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])
    from spotspray.geom import convex_hull

    return convex_hull(pts)


def l_shape(cx, cy, w, h, arm, deg=0.0):
    """L-shaped polygon with overall bounds w x h and arm thickness `arm`."""
    base = [(0, 0), (w, 0), (w, arm), (arm, arm), (arm, h), (0, h)]
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return [(cx + c * x - s * y, cy + s * x + c * y) for x, y in base]


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def winding_number_class(p, poly: Polygon, tol=1e-9) -> str:
    """Winding-number point classification, independent of the ray-cast path."""
    px, py = float(p[0]), float(p[1])
    v = poly.vertices
    n = len(v)
    # boundary: distance to any segment under tol
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        dx, dy = bx - ax, by - ay
        e = dx * dx + dy * dy
        t = 0.0 if e == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / e))
        if math.hypot(px - (ax + t * dx), py - (ay + t * dy)) <= tol:
            return "boundary"
    total = 0.0
    for i in range(n):
        ax, ay = v[i] - (px, py)
        bx, by = v[(i + 1) % n] - (px, py)
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return "inside" if abs(total) > math.pi else "outside"


def min_pairwise_distance(sa: np.ndarray, sb: np.ndarray) -> float:
    """Minimum distance between two point clouds (KD-tree nearest neighbour)."""
    from scipy.spatial import cKDTree

    tree = cKDTree(sb)
    d, _ = tree.query(sa, k=1)
    return float(d.min())


def sample_boundary(poly: Polygon, step: float) -> np.ndarray:
    """Dense boundary sampling at the given arclength step."""
    v = poly.vertices
    out = []
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        seg = math.hypot(*(b - a))
        n = max(1, int(math.ceil(seg / step)))
        for k in range(n):
            t = k / n
            out.append(a + t * (b - a))
    return np.asarray(out)


def min_width_oracle(poly: Polygon) -> float:
    """Minimum width by a two-stage dense sweep over projection directions."""
    v = poly.vertices

    def width(theta):
        nx, ny = -math.sin(theta), math.cos(theta)
        d = v[:, 0] * nx + v[:, 1] * ny
        return float(d.max() - d.min())

    coarse = np.linspace(0.0, math.pi, 1441)
    widths = [width(t) for t in coarse]
    k = int(np.argmin(widths))
    lo = coarse[max(0, k - 1)]
    hi = coarse[min(len(coarse) - 1, k + 1)]
    fine = np.linspace(lo, hi, 4001)
    return min(width(t) for t in fine)


_PERMS_CACHE = {}


def brute_force_tsp(cost: np.ndarray):
    """Exhaustive optimum over all closed tours fixing node 0; returns
    (optimal cost, one optimal closed sequence)."""
    n = cost.shape[0]
    if n not in _PERMS_CACHE:
        _PERMS_CACHE[n] = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64)
    perms = _PERMS_CACHE[n]
    full = np.concatenate([np.zeros((len(perms), 1), dtype=np.int64), perms], axis=1)
    costs = cost[full[:, :-1], full[:, 1:]].sum(axis=1) + cost[full[:, -1], 0]
    k = int(np.argmin(costs))
    return float(costs[k]), tuple(int(x) for x in full[k]) + (0,)


def segment_hits_hull_interior(a, b, hull: Polygon) -> bool:
    """Crossing test used by the visibility oracle.

    A chord between two boundary points of a convex hull runs entirely through
    the interior without any (0,1) boundary transition, so the midpoint test
    is needed on top of the clip parameters.
    """
    from spotspray.geom import point_in_polygon, segment_clips_polygon

    if math.hypot(b[0] - a[0], b[1] - a[1]) < 1e-12:
        return False
    if segment_clips_polygon(a, b, hull):
        return True
    mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
    return point_in_polygon(mid, hull) == "inside"


def visibility_shortest_path(p, q, hulls):
    """Dijkstra over the visibility graph of {p, q} + hull vertices."""
    import networkx as nx

    nodes = [(float(p[0]), float(p[1])), (float(q[0]), float(q[1]))]
    for h in hulls:
        nodes.extend((float(x), float(y)) for x, y in h.vertices)
    g = nx.Graph()
    g.add_nodes_from(range(len(nodes)))
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            a, b = nodes[i], nodes[j]
            if any(segment_hits_hull_interior(a, b, h) for h in hulls):
                continue
            g.add_edge(i, j, weight=math.hypot(b[0] - a[0], b[1] - a[1]))
    return nx.dijkstra_path_length(g, 0, 1)


def lane_traversal_counts(plan: CoveragePlan, tol=1e-6):
    """How often each lane appears as a consecutive waypoint pair of the path."""
    wp = plan.path.waypoints
    counts = []
    for lane in plan.laneset.lanes:
        a = np.array(lane.a)
        b = np.array(lane.b)
        c = 0
        for k in range(len(wp) - 1):
            p, q = wp[k], wp[k + 1]
            if (np.hypot(*(p - a)) < tol and np.hypot(*(q - b)) < tol) or \
               (np.hypot(*(p - b)) < tol and np.hypot(*(q - a)) < tol):
                c += 1
        counts.append(c)
    return counts


def cpp_route_oracle(plan: CoveragePlan, entry) -> float:
    """Exhaustive minimum closed-walk length over the plan's own lane +
    headland-arc edge set: required edges once, plus the cheapest subset of
    duplicated arcs that makes every node degree even (searched exhaustively)."""
    assert len(plan.headland_rings) == 1, "oracle covers single-ring plans"
    ring = plan.headland_rings[0].waypoints[:-1]
    cum = geom.ring_cumlen(ring)
    total = float(cum[-1])
    s_anchor, d_anchor = geom.locate_on_ring(ring, entry)
    lanes = plan.laneset.lanes

    raw = [("anchor", s_anchor % total)]
    for li, lane in enumerate(lanes):
        raw.append((f"a{li}", lane.sa % total))
        raw.append((f"b{li}", lane.sb % total))
    order = sorted(range(len(raw)), key=lambda k: raw[k][1])
    node_s = []
    assign = {}
    for k in order:
        name, s = raw[k]
        if node_s and s - node_s[-1] <= 1e-9:
            assign[name] = len(node_s) - 1
        else:
            node_s.append(s)
            assign[name] = len(node_s) - 1
    if len(node_s) > 1 and (node_s[0] + total) - node_s[-1] <= 1e-9:
        last = len(node_s) - 1
        node_s.pop()
        assign = {k: (0 if v == last else v) for k, v in assign.items()}
    m = len(node_s)
    arc_len = [total] if m == 1 else [(node_s[(k + 1) % m] - node_s[k]) % total for k in range(m)]
    lane_deg = [0] * m
    for li in range(len(lanes)):
        lane_deg[assign[f"a{li}"]] += 1
        lane_deg[assign[f"b{li}"]] += 1

    best = math.inf
    for mask in range(1 << m):
        deg = lane_deg[:]
        extra = 0.0
        for k in range(m):
            if mask >> k & 1:
                deg[k] += 1
                deg[(k + 1) % m] += 1
                extra += arc_len[k]
        if all(d % 2 == 0 for d in deg):
            best = min(best, extra)
    required = total + sum(l.length for l in lanes)
    return 2.0 * d_anchor + required + best


def path_points_sampled(waypoints, step=0.1):
    wp = np.asarray(waypoints, dtype=float)
    pts = []
    for k in range(len(wp) - 1):
        a, b = wp[k], wp[k + 1]
        seg = math.hypot(*(b - a))
        n = max(2, int(math.ceil(seg / step)) + 1)
        ts = np.linspace(0.0, 1.0, n)
        pts.append(a + ts[:, None] * (b - a))
    return np.vstack(pts) if pts else np.empty((0, 2))
