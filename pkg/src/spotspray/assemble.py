"""End-to-end mission pipeline: transition graph, tour, per-patch coverage,
entry/exit transitions, obstacle/containment correction, and the report.

Patch entry and exit points are fixed by the tour's projection points
before any coverage planning happens, which keeps sequencing and coverage
separable.  Small patches (narrower than the operating width) are sprayed
by the straight entry-to-exit pass; every other patch gets a headland
coverage plan.  Obstacle and field-containment corrections apply to the
transit segments only.  Both coverage methods are planned so the report
can state the classic-vs-optimised comparison; the mission path realizes
the configured one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter
from typing import Dict, List, Optional, Sequence, Tuple

from . import avoid, coverage, model, tsp
from .geom import Point2, Polyline, locate_on_ring, shorter_ring_walk

_JUNCTION_TOL = 1e-9


@dataclass(frozen=True)
class Leg:
    tag: str  # "transit" | "detour" | "coverage"
    patch: Optional[int]  # patch index for coverage legs
    points: Tuple[Point2, ...]
    length: float


def _make_leg(tag: str, patch: Optional[int], points: Sequence) -> Optional[Leg]:
    pts = [Point2(float(p[0]), float(p[1])) for p in points]
    dedup = [pts[0]]
    for p in pts[1:]:
        if math.hypot(p.x - dedup[-1].x, p.y - dedup[-1].y) > 1e-12:
            dedup.append(p)
    if len(dedup) < 2:
        return None
    length = sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(dedup[:-1], dedup[1:]))
    return Leg(tag=tag, patch=patch, points=tuple(dedup), length=length)


@dataclass(frozen=True)
class MissionPath:
    legs: Tuple[Leg, ...]
    visit_order: tsp.TspTour
    total_length: float

    @property
    def waypoints(self) -> Polyline:
        pts: List[Point2] = []
        for leg in self.legs:
            start = 0
            if pts and math.hypot(leg.points[0].x - pts[-1].x,
                                  leg.points[0].y - pts[-1].y) <= _JUNCTION_TOL:
                start = 1
            pts.extend(leg.points[start:])
        return Polyline(pts)

    @property
    def segment_tags(self) -> List[Tuple[str, Optional[int]]]:
        tags: List[Tuple[str, Optional[int]]] = []
        last: Optional[Point2] = None
        for leg in self.legs:
            n_seg = len(leg.points) - 1
            if last is not None and math.hypot(leg.points[0].x - last.x,
                                               leg.points[0].y - last.y) > _JUNCTION_TOL:
                n_seg += 1  # implicit junction jump inherits the leg tag
            tags.extend([(leg.tag, leg.patch)] * n_seg)
            last = leg.points[-1]
        return tags


@dataclass(frozen=True)
class PatchRecord:
    index: int
    needs_coverage: bool
    entry: Point2
    exit: Point2
    method: str  # "classic" | "optimised" | "direct"
    length_classic: float  # coverage + exit transition; chord length for small patches
    length_optimised: float
    length_used: float
    lane_count: int


@dataclass(frozen=True)
class MissionReport:
    n_patches_all: int
    n_patches_covg: int
    tsp_init: str
    tsp_refine: Tuple[str, ...]
    coverage_method: str
    exit_transition: str
    seed: int
    width: float
    time_limit: float
    move_budget: Optional[int]
    t_graph: float
    t_init: float
    t_refine: float
    t_coverage_classic: float
    t_coverage_optim: float
    t_avoid: float
    t_total: float
    refine_iterations: int
    l_tsp_init: float
    l_tsp: float
    transit_length: float
    detour_extra: float
    sum_covg_classic: float
    sum_covg_optim: float
    savings_m: float
    savings_pct: float
    l_total_classic: float
    l_total_optim: float
    l_total: float
    coverage_share_classic: float
    coverage_share_optim: float
    coverage_share: float
    sum_all_patches: float
    per_patch: Tuple[PatchRecord, ...]
    warnings: Tuple[str, ...]


def exit_transition(plan: Optional[coverage.CoveragePlan], entry: Point2, exit: Point2,
                    mode: str) -> Optional[Polyline]:
    """Connector from a patch's entry point to its exit point after coverage.

    "straight" is the single chord; "headland" runs along the plan's headland
    ring (never shorter than the chord).  Returns None when entry and exit
    coincide.
    """
    if math.hypot(exit.x - entry.x, exit.y - entry.y) < 1e-9:
        return None
    if mode == "straight" or plan is None or not plan.headland_rings:
        return Polyline([entry, exit])
    rings = [r.waypoints[:-1] for r in plan.headland_rings]
    ring = min(rings, key=lambda v: locate_on_ring(v, entry)[1])
    s_e, _ = locate_on_ring(ring, entry)
    s_x, _ = locate_on_ring(ring, exit)
    walk, _ = shorter_ring_walk(ring, s_e, s_x)
    return Polyline([entry] + walk + [exit])


@dataclass
class _PipelineState:
    instance: model.ProblemInstance
    graph: model.TransitionGraph
    tour: tsp.TspTour
    init_cost: float
    outcome: tsp.RefineOutcome
    interior: List[int]
    needs: List[bool]
    entries: Dict[int, Point2]
    exits: Dict[int, Point2]
    plans: Dict[str, Dict[int, coverage.CoveragePlan]]
    exit_polys: Dict[int, Optional[Polyline]]
    transit_legs: List[Optional[Leg]]
    timings: Dict[str, float]
    warnings: List[str]
    t_start: float


def _solve(instance: model.ProblemInstance) -> _PipelineState:
    cfg = instance.config
    warnings: List[str] = []
    t_start = perf_counter()

    t0 = perf_counter()
    graph = model.build_transition_graph(instance)
    t_graph = perf_counter() - t0
    warnings.extend(graph.warnings)

    classification = model.classify_patches(instance, graph)

    t0 = perf_counter()
    init_tour = tsp.init_nn(graph) if cfg.tsp_init == "nn" else tsp.init_denn(graph)
    t_init = perf_counter() - t0

    if cfg.move_budget is not None:
        budget = tsp.Budget(moves=cfg.move_budget)
    else:
        budget = tsp.Budget(seconds=cfg.time_limit)
    outcome = tsp.refine_pipeline(graph, init_tour, cfg.tsp_refine, cfg.seed, budget)
    tour = outcome.tour
    seq = tour.sequence
    interior = list(seq[1:-1])

    entries: Dict[int, Point2] = {}
    exits: Dict[int, Point2] = {}
    for pos, node in enumerate(interior):
        entries[node] = graph.projection(seq[pos], node)[1]
        exits[node] = graph.projection(node, seq[pos + 2])[0]

    plans: Dict[str, Dict[int, coverage.CoveragePlan]] = {"classic": {}, "optimised": {}}
    t_cov = {"classic": 0.0, "optimised": 0.0}
    needs = list(classification.needs_coverage)
    for node in interior:
        pidx = node - 1
        if not needs[pidx]:
            continue
        patch = instance.patches[pidx]
        entry = entries[node]
        try:
            orientation = coverage.select_orientation(patch, cfg.width)
            t0 = perf_counter()
            plans["classic"][pidx] = coverage.plan_classic(
                patch, entry, cfg.width, patch_index=pidx, orientation=orientation)
            t_cov["classic"] += perf_counter() - t0
            t0 = perf_counter()
            plans["optimised"][pidx] = coverage.plan_optimised(
                patch, entry, cfg.width, patch_index=pidx, orientation=orientation)
            t_cov["optimised"] += perf_counter() - t0
        except coverage.HeadlandUnavailable:
            warnings.append(
                f"patch {pidx} is too thin for a headland; treated as a single-pass patch")
            needs[pidx] = False

    exit_polys: Dict[int, Optional[Polyline]] = {}
    for node in interior:
        pidx = node - 1
        if needs[pidx]:
            ref_plan = plans["classic"][pidx]
            exit_polys[pidx] = exit_transition(ref_plan, entries[node], exits[node],
                                               cfg.exit_transition)
        else:
            exit_polys[pidx] = None  # the chord itself is the patch pass

    t0 = perf_counter()
    hulls = [avoid.ObstacleHull.build(o, cfg.safety_margin) for o in instance.obstacles]
    chain = [0] + interior + [0]
    transit_legs: List[Optional[Leg]] = []
    for k in range(len(chain) - 1):
        start = exits.get(chain[k], instance.entrance)
        end = entries.get(chain[k + 1], instance.entrance)
        if math.hypot(end.x - start.x, end.y - start.y) < 1e-12:
            transit_legs.append(None)
            continue
        detoured = avoid.detour_segment(start, end, hulls, method=cfg.obstacle_method)
        contained = avoid.contain_in_field(detoured, instance.field)
        tag = "transit" if len(contained.waypoints) == 2 else "detour"
        transit_legs.append(_make_leg(tag, None, contained.waypoints))
    t_avoid = perf_counter() - t0

    timings = {"graph": t_graph, "init": t_init, "refine": outcome.runtime,
               "cov_classic": t_cov["classic"], "cov_optim": t_cov["optimised"],
               "avoid": t_avoid}
    return _PipelineState(
        instance=instance, graph=graph, tour=tour, init_cost=init_tour.cost,
        outcome=outcome, interior=interior, needs=needs, entries=entries, exits=exits,
        plans=plans, exit_polys=exit_polys, transit_legs=transit_legs,
        timings=timings, warnings=warnings, t_start=t_start,
    )


def _patch_total(st: _PipelineState, pidx: int, method: str) -> float:
    if not st.needs[pidx]:
        entry = st.entries[pidx + 1]
        exit_pt = st.exits[pidx + 1]
        return math.hypot(exit_pt.x - entry.x, exit_pt.y - entry.y)
    exit_len = st.exit_polys[pidx].length if st.exit_polys[pidx] is not None else 0.0
    return st.plans[method][pidx].length + exit_len


def _realize(st: _PipelineState, method: str) -> Tuple[MissionPath, MissionReport]:
    cfg = st.instance.config
    legs: List[Leg] = []
    if st.transit_legs[0]:
        legs.append(st.transit_legs[0])
    for pos, node in enumerate(st.interior):
        pidx = node - 1
        if st.needs[pidx]:
            leg = _make_leg("coverage", pidx, st.plans[method][pidx].path.waypoints)
            if leg:
                legs.append(leg)
            if st.exit_polys[pidx] is not None:
                leg = _make_leg("coverage", pidx, st.exit_polys[pidx].waypoints)
                if leg:
                    legs.append(leg)
        else:
            leg = _make_leg("coverage", pidx, [st.entries[node], st.exits[node]])
            if leg:
                legs.append(leg)
        if st.transit_legs[pos + 1]:
            legs.append(st.transit_legs[pos + 1])

    transit_total = sum(leg.length for leg in st.transit_legs if leg)

    records: List[PatchRecord] = []
    for node in sorted(st.interior):
        pidx = node - 1
        records.append(PatchRecord(
            index=pidx,
            needs_coverage=st.needs[pidx],
            entry=st.entries[node],
            exit=st.exits[node],
            method=method if st.needs[pidx] else "direct",
            length_classic=_patch_total(st, pidx, "classic"),
            length_optimised=_patch_total(st, pidx, "optimised"),
            length_used=_patch_total(st, pidx, method),
            lane_count=st.plans[method][pidx].lane_count if st.needs[pidx] else 0,
        ))

    sum_covg_classic = sum(r.length_classic for r in records if r.needs_coverage)
    sum_covg_optim = sum(r.length_optimised for r in records if r.needs_coverage)
    sum_all_classic = sum(r.length_classic for r in records)
    sum_all_optim = sum(r.length_optimised for r in records)
    sum_all_used = sum(r.length_used for r in records)

    l_total_classic = transit_total + sum_all_classic
    l_total_optim = transit_total + sum_all_optim
    l_total = transit_total + sum_all_used
    savings_m = sum_covg_classic - sum_covg_optim
    sum_covg_used = sum_covg_classic if method == "classic" else sum_covg_optim

    report = MissionReport(
        n_patches_all=st.instance.n_patches,
        n_patches_covg=sum(1 for node in st.interior if st.needs[node - 1]),
        tsp_init=cfg.tsp_init,
        tsp_refine=tuple(cfg.tsp_refine),
        coverage_method=method,
        exit_transition=cfg.exit_transition,
        seed=cfg.seed,
        width=cfg.width,
        time_limit=cfg.time_limit,
        move_budget=cfg.move_budget,
        t_graph=st.timings["graph"],
        t_init=st.timings["init"],
        t_refine=st.timings["refine"],
        t_coverage_classic=st.timings["cov_classic"],
        t_coverage_optim=st.timings["cov_optim"],
        t_avoid=st.timings["avoid"],
        t_total=perf_counter() - st.t_start,
        refine_iterations=st.outcome.iterations,
        l_tsp_init=st.init_cost,
        l_tsp=st.tour.cost,
        transit_length=transit_total,
        detour_extra=transit_total - st.tour.cost,
        sum_covg_classic=sum_covg_classic,
        sum_covg_optim=sum_covg_optim,
        savings_m=savings_m,
        savings_pct=savings_m / sum_covg_classic if sum_covg_classic > 0 else 0.0,
        l_total_classic=l_total_classic,
        l_total_optim=l_total_optim,
        l_total=l_total,
        coverage_share_classic=sum_covg_classic / l_total_classic if l_total_classic > 0 else 0.0,
        coverage_share_optim=sum_covg_optim / l_total_optim if l_total_optim > 0 else 0.0,
        coverage_share=sum_covg_used / l_total if l_total > 0 else 0.0,
        sum_all_patches=sum_all_used,
        per_patch=tuple(records),
        warnings=tuple(st.warnings),
    )
    mission = MissionPath(legs=tuple(legs), visit_order=st.tour, total_length=l_total)
    return mission, report


def plan_mission(instance: model.ProblemInstance) -> Tuple[MissionPath, MissionReport]:
    """Run the full pipeline on a validated instance with its configured
    coverage method."""
    st = _solve(instance)
    return _realize(st, instance.config.coverage_method)


def plan_mission_compare(instance: model.ProblemInstance
                         ) -> Dict[str, Tuple[MissionPath, MissionReport]]:
    """Plan once, realize the mission path for both coverage methods
    (sequencing, transits and per-patch plans are shared)."""
    st = _solve(instance)
    return {m: _realize(st, m) for m in ("classic", "optimised")}
