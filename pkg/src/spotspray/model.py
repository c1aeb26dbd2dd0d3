"""Problem-instance representation, validation and transition-graph construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple

import numpy as np
from shapely.geometry import Point as _ShapelyPoint

from . import geom
from ._core import kernels
from .geom import Point2, Polygon

# A patch may poke out of the field by at most this much before it is an error
# rather than something we silently clip.
CLIP_TOLERANCE = 0.5
# Transition costs must stay strictly positive; contact distances are clamped here.
MIN_COST = 1e-6

VALID_TSP_INITS = ("nn", "denn")
VALID_REFINERS = ("h1", "h2", "h3", "h4")
VALID_COVERAGE = ("classic", "optimised")
VALID_EXIT_TRANSITIONS = ("straight", "headland")
VALID_OBSTACLE_METHODS = ("tangent", "contour")


@dataclass(frozen=True)
class PlannerConfig:
    """Planner parameters; defaults follow the reference setup (2 m width, 10 s budget)."""

    width: float = 2.0
    time_limit: float = 10.0
    seed: int = 0
    tsp_init: str = "nn"
    tsp_refine: Tuple[str, ...] = ("h4",)
    coverage_method: str = "optimised"
    exit_transition: str = "straight"
    move_budget: Optional[int] = None  # deterministic alternative to the wall clock
    obstacle_method: str = "tangent"
    safety_margin: float = 0.0

    def __post_init__(self):
        if not (self.width > 0.0):
            raise ValueError("operating width W must be > 0")
        if not (self.time_limit > 0.0):
            raise ValueError("time limit must be > 0")
        if self.tsp_init not in VALID_TSP_INITS:
            raise ValueError(f"tsp_init must be one of {VALID_TSP_INITS}")
        for h in self.tsp_refine:
            if h not in VALID_REFINERS:
                raise ValueError(f"unknown refinement heuristic {h!r}")
        if self.coverage_method not in VALID_COVERAGE:
            raise ValueError(f"coverage_method must be one of {VALID_COVERAGE}")
        if self.exit_transition not in VALID_EXIT_TRANSITIONS:
            raise ValueError(f"exit_transition must be one of {VALID_EXIT_TRANSITIONS}")
        if self.obstacle_method not in VALID_OBSTACLE_METHODS:
            raise ValueError(f"obstacle_method must be one of {VALID_OBSTACLE_METHODS}")
        if self.move_budget is not None and self.move_budget < 0:
            raise ValueError("move_budget must be >= 0")
        if self.safety_margin < 0.0:
            raise ValueError("safety_margin must be >= 0")


@dataclass(frozen=True)
class ProblemInstance:
    field: Polygon
    obstacles: Tuple[Polygon, ...]
    patches: Tuple[Polygon, ...]
    entrance: Point2
    config: PlannerConfig

    @property
    def n_patches(self) -> int:
        return len(self.patches)


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" or "warning"
    feature: str  # "field", "entrance", "obstacle", "patch", "config"
    index: Optional[int]
    message: str

    def __str__(self) -> str:
        where = self.feature if self.index is None else f"{self.feature}[{self.index}]"
        return f"{self.severity}: {where}: {self.message}"


@dataclass
class ValidationReport:
    issues: List[ValidationIssue] = dc_field(default_factory=list)

    def add(self, severity: str, feature: str, index: Optional[int], message: str):
        self.issues.append(ValidationIssue(severity, feature, index, message))

    @property
    def errors(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


class ValidationError(ValueError):
    """Raised by callers that want a hard failure instead of a report."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(str(i) for i in report.errors))


def _coerce_polygon(raw, feature: str, index: Optional[int], report: ValidationReport):
    if isinstance(raw, Polygon):
        return raw
    try:
        return Polygon(raw)
    except geom.GeometryError as exc:
        report.add("error", feature, index, str(exc))
        return None


def validate_instance(field_raw, obstacles_raw, patches_raw, entrance_raw,
                      config: PlannerConfig):
    """Normalise and check raw geometry; returns (instance | None, report).

    Patches exceeding the field contour by <= 0.5 m are clipped back to the
    field with a warning; larger excursions, overlapping obstacle/patch
    pairs and invalid polygons are errors.
    """
    report = ValidationReport()
    field = _coerce_polygon(field_raw, "field", None, report)

    try:
        ex, ey = float(entrance_raw[0]), float(entrance_raw[1])
        if not (math.isfinite(ex) and math.isfinite(ey)):
            raise ValueError
        entrance = Point2(ex, ey)
    except (TypeError, ValueError, IndexError):
        report.add("error", "entrance", None, "entrance must be a finite (x, y) point")
        entrance = None

    obstacles: List[Polygon] = []
    for k, raw in enumerate(obstacles_raw):
        p = _coerce_polygon(raw, "obstacle", k, report)
        if p is not None:
            obstacles.append(p)

    patches: List[Polygon] = []
    patch_idx: List[int] = []
    for k, raw in enumerate(patches_raw):
        p = _coerce_polygon(raw, "patch", k, report)
        if p is not None:
            patches.append(p)
            patch_idx.append(k)

    if field is None or entrance is None:
        return None, report

    field_sp = field.as_shapely()
    field_cover = field_sp.buffer(1e-9)

    if geom.point_in_polygon(entrance, field) == "outside":
        report.add("error", "entrance", None,
                   f"entrance ({entrance.x:.3f}, {entrance.y:.3f}) lies outside the field contour")

    for k, obs in enumerate(obstacles):
        if not field_cover.covers(obs.as_shapely()):
            report.add("error", "obstacle", k, "obstacle is not contained in the field contour")

    clipped: List[Polygon] = []
    for k, patch in zip(patch_idx, patches):
        sp = patch.as_shapely()
        outside = sp.difference(field_sp)
        if outside.area > 1e-9:
            excursion = _excursion_depth(outside, field_sp)
            if excursion > CLIP_TOLERANCE:
                report.add("error", "patch", k,
                           f"patch exceeds the field contour by {excursion:.3f} m "
                           f"(> {CLIP_TOLERANCE} m); fix the input data")
                continue
            inter = sp.intersection(field_sp)
            part = _largest_polygon(inter)
            if part is None:
                report.add("error", "patch", k, "patch lies entirely outside the field contour")
                continue
            report.add("warning", "patch", k,
                       f"patch exceeds the field contour by {excursion:.3f} m; clipped to the field")
            try:
                clipped.append(Polygon.from_shapely(part))
            except geom.GeometryError as exc:
                report.add("error", "patch", k, f"clipped patch is degenerate: {exc}")
            continue
        clipped.append(patch)
    patches = clipped

    for k, obs in enumerate(obstacles):
        osp = obs.as_shapely()
        for m, patch in enumerate(patches):
            if osp.intersection(patch.as_shapely()).area > 1e-9:
                report.add("error", "obstacle", k,
                           f"obstacle {k} overlaps patch {m}; obstacles must be disjoint from patches")

    # avoidance works on convex hulls: anything inside a hull is unreachable
    for k, obs in enumerate(obstacles):
        try:
            hull = geom.convex_hull(obs.vertices)
        except geom.GeometryError:
            continue
        if geom.point_in_polygon(entrance, hull) == "inside":
            report.add("error", "entrance", None,
                       f"entrance lies inside the convex hull of obstacle {k}; "
                       f"no obstacle-avoiding path can start there")
        hsp = hull.as_shapely()
        for m, patch in enumerate(patches):
            if hsp.intersection(patch.as_shapely()).area > 1e-9:
                report.add("warning", "patch", m,
                           f"patch {m} lies inside the convex hull of obstacle {k}; "
                           f"transit detours around that obstacle may be infeasible")

    for a in range(len(patches)):
        for b in range(a + 1, len(patches)):
            if patches[a].as_shapely().intersection(patches[b].as_shapely()).area > 1e-9:
                report.add("error", "patch", a, f"patch {a} overlaps patch {b}")

    if not patches:
        report.add("error", "patch", None, "at least one patch is required")

    if not report.ok:
        return None, report
    instance = ProblemInstance(field=field, obstacles=tuple(obstacles),
                               patches=tuple(patches), entrance=entrance, config=config)
    return instance, report


def _excursion_depth(outside_geom, field_sp) -> float:
    """Greatest distance any protruding point lies beyond the field boundary."""
    worst = 0.0
    geoms = outside_geom.geoms if outside_geom.geom_type.startswith("Multi") else [outside_geom]
    for g in geoms:
        if g.is_empty or g.geom_type != "Polygon":
            continue
        ring = g.exterior.segmentize(0.05)
        for x, y in ring.coords:
            worst = max(worst, field_sp.distance(_ShapelyPoint(x, y)))
    return worst


def _largest_polygon(sp):
    if sp.is_empty:
        return None
    if sp.geom_type == "Polygon":
        return sp
    if sp.geom_type.startswith("Multi") or sp.geom_type == "GeometryCollection":
        polys = [g for g in sp.geoms if g.geom_type == "Polygon" and g.area > 1e-9]
        if polys:
            return max(polys, key=lambda g: g.area)
    return None


@dataclass(frozen=True)
class TransitionGraph:
    """Complete graph over entrance (node 0) and patches with boundary-to-boundary
    costs and the projection points realizing them."""

    n: int
    cost: np.ndarray  # (n, n) symmetric, zero diagonal
    proj: np.ndarray  # (n, n, 4): x,y on node i then x,y on node j
    warnings: Tuple[str, ...] = ()

    def projection(self, i: int, j: int) -> Tuple[Point2, Point2]:
        """Projection points (on node i, on node j) realizing cost[i, j]."""
        px = self.proj[i, j]
        return Point2(float(px[0]), float(px[1])), Point2(float(px[2]), float(px[3]))

    def representatives(self) -> Tuple[np.ndarray, np.ndarray]:
        """One planar point per node: the entrance, and each patch's projection
        point toward the entrance (used by the H4 parallel gate)."""
        px = np.empty(self.n, dtype=np.float64)
        py = np.empty(self.n, dtype=np.float64)
        px[0], py[0] = self.proj[0, 0, 0], self.proj[0, 0, 1]
        for k in range(1, self.n):
            px[k], py[k] = self.proj[0, k, 2], self.proj[0, k, 3]
        return px, py


def build_transition_graph(instance: ProblemInstance) -> TransitionGraph:
    """Pairwise closest-projection-point costs between entrance and patches.

    Costs are symmetric Euclidean boundary distances; contact pairs are
    clamped to MIN_COST with a warning so that every off-diagonal cost stays
    strictly positive.  Obstacle detours are deliberately not part of the
    costs; the final transit segments get corrected instead.
    """
    n = instance.n_patches + 1
    cost = np.zeros((n, n), dtype=np.float64)
    proj = np.zeros((n, n, 4), dtype=np.float64)
    warnings: List[str] = []
    ex, ey = instance.entrance
    proj[0, 0] = (ex, ey, ex, ey)
    for k in range(1, n):
        patch = instance.patches[k - 1]
        d, bx, by = kernels.point_polygon_closest(ex, ey, patch.vertices)
        d = float(d)
        if d < MIN_COST:
            warnings.append(f"entrance touches patch {k - 1}; cost clamped to {MIN_COST} m")
            d = MIN_COST
        cost[0, k] = cost[k, 0] = d
        proj[0, k] = (ex, ey, bx, by)
        proj[k, 0] = (bx, by, ex, ey)
        proj[k, k] = (bx, by, bx, by)
    for i in range(1, n):
        for j in range(i + 1, n):
            a = instance.patches[i - 1]
            b = instance.patches[j - 1]
            d, ax, ay, bx, by = kernels.polygon_pair_closest(a.vertices, b.vertices)
            d = float(d)
            if d < MIN_COST:
                warnings.append(f"patches {i - 1} and {j - 1} touch; cost clamped to {MIN_COST} m")
                d = MIN_COST
            cost[i, j] = cost[j, i] = d
            proj[i, j] = (ax, ay, bx, by)
            proj[j, i] = (bx, by, ax, ay)
    return TransitionGraph(n=n, cost=cost, proj=proj, warnings=tuple(warnings))


def transition_graph_from_points(entrance, points) -> TransitionGraph:
    """Degenerate transition graph over point-like patches (testing/benchmarks)."""
    nodes = np.asarray([tuple(entrance)] + [tuple(p) for p in points], dtype=np.float64)
    n = len(nodes)
    dx = nodes[:, 0, None] - nodes[None, :, 0]
    dy = nodes[:, 1, None] - nodes[None, :, 1]
    cost = np.hypot(dx, dy)
    np.fill_diagonal(cost, 0.0)
    proj = np.zeros((n, n, 4), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            proj[i, j] = (nodes[i, 0], nodes[i, 1], nodes[j, 0], nodes[j, 1])
    return TransitionGraph(n=n, cost=np.ascontiguousarray(cost), proj=proj)


@dataclass(frozen=True)
class PatchClassification:
    """Which patches need an area-coverage plan (vs. a single spray pass)."""

    needs_coverage: Tuple[bool, ...]
    n_coverage: int

    @property
    def n_small(self) -> int:
        return len(self.needs_coverage) - self.n_coverage


def classify_patches(instance: ProblemInstance, graph: TransitionGraph) -> PatchClassification:
    """A patch needs coverage iff its convex hull's minimum width exceeds the
    operating width: anything narrower is fully sprayed by one straight pass.

    The criterion is tour-independent, which keeps patch sequencing and
    per-patch coverage planning separable.  `graph` is accepted for interface
    symmetry with the pipeline stages; the decision does not depend on it.
    """
    w = instance.config.width
    needs = []
    for patch in instance.patches:
        hull = geom.convex_hull(patch.vertices)
        needs.append(geom.convex_min_width(hull) > w)
    return PatchClassification(needs_coverage=tuple(needs), n_coverage=sum(needs))
