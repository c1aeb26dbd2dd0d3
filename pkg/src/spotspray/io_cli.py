"""Instance ingestion, result emission and the command-line driver.

Instances travel as GeoJSON-style feature collections: one polygon feature
per field/obstacle/patch plus one point feature for the entrance, each
discriminated by a "role" property.  Coordinates are local meters by
default; lon/lat documents (crs "EPSG:4326") are projected to a local
east/north frame about the field centroid.  Results are emitted as a
tagged line-string document, a CSV report (one row per configuration) and
a deterministic SVG rendering.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields as dc_fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import assemble, model

EARTH_RADIUS_M = 6371008.8
ROLES = ("field", "entrance", "obstacle", "patch")
CRS_METERS = "local-meters"
CRS_LONLAT = "EPSG:4326"


class SchemaError(ValueError):
    """Input document violates the feature-collection schema."""


def _feature_byte_offsets(text: str) -> List[int]:
    """Byte offset of each top-level feature object inside the "features" array.

    Works on the raw document text so error messages can point at the file.
    Returns an empty list when the array cannot be located.
    """
    key = text.find('"features"')
    if key < 0:
        return []
    start = text.find("[", key)
    if start < 0:
        return []
    offsets = []
    depth = 0
    in_str = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_str:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch == "{":
            if depth == 1:
                offsets.append(len(text[:i].encode("utf-8")))
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                break
    return offsets


def _project_lonlat(coords: Sequence[Tuple[float, float]], lon0: float, lat0: float):
    k = math.pi / 180.0
    cos0 = math.cos(lat0 * k)
    return [((lon - lon0) * k * EARTH_RADIUS_M * cos0, (lat - lat0) * k * EARTH_RADIUS_M)
            for lon, lat in coords]


def parse_instance(text: str, config: model.PlannerConfig):
    """Parse and validate an instance document; returns (instance | None, report).

    Schema violations carry the feature identifier and its byte offset in the
    document.
    """
    report = model.ValidationReport()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        report.add("error", "document", None, f"not valid JSON: {exc}")
        return None, report
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        report.add("error", "document", None, 'top level must be a FeatureCollection')
        return None, report
    features = doc.get("features")
    if not isinstance(features, list):
        report.add("error", "document", None, 'missing "features" array')
        return None, report
    crs = doc.get("crs", CRS_METERS)
    if crs not in (CRS_METERS, CRS_LONLAT):
        report.add("error", "document", None,
                   f'unknown crs {crs!r}; expected "{CRS_METERS}" or "{CRS_LONLAT}"')
        return None, report
    offsets = _feature_byte_offsets(text)

    def feature_tag(idx: int, feat) -> str:
        ident = None
        if isinstance(feat, dict):
            props = feat.get("properties") or {}
            ident = props.get("id")
        tag = f"feature {ident!r}" if ident is not None else f"feature #{idx}"
        if idx < len(offsets):
            tag += f" (byte offset {offsets[idx]})"
        return tag

    field_ring = None
    entrance = None
    obstacles: List[List[Tuple[float, float]]] = []
    patches: List[List[Tuple[float, float]]] = []
    for idx, feat in enumerate(features):
        tag = feature_tag(idx, feat)
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            report.add("error", "document", idx, f"{tag}: not a Feature object")
            continue
        props = feat.get("properties") or {}
        role = props.get("role")
        geometry = feat.get("geometry") or {}
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if role not in ROLES:
            report.add("error", "document", idx, f"{tag}: unknown role {role!r}")
            continue
        if role == "entrance":
            if gtype != "Point" or not isinstance(coords, (list, tuple)) or len(coords) < 2:
                report.add("error", "document", idx, f"{tag}: entrance needs a Point geometry")
                continue
            if entrance is not None:
                report.add("error", "document", idx, f"{tag}: duplicate entrance feature")
                continue
            entrance = (float(coords[0]), float(coords[1]))
            continue
        if gtype != "Polygon" or not coords or not isinstance(coords, list):
            report.add("error", "document", idx, f"{tag}: {role} needs a Polygon geometry")
            continue
        if len(coords) > 1:
            report.add("error", "document", idx,
                       f"{tag}: interior rings are not supported for {role} polygons")
            continue
        try:
            ring = [(float(x), float(y)) for x, y in coords[0]]
        except (TypeError, ValueError):
            report.add("error", "document", idx, f"{tag}: malformed polygon coordinates")
            continue
        if role == "field":
            if field_ring is not None:
                report.add("error", "document", idx, f"{tag}: duplicate field feature")
                continue
            field_ring = ring
        elif role == "obstacle":
            obstacles.append(ring)
        else:
            patches.append(ring)

    if field_ring is None:
        report.add("error", "document", None, 'missing required feature with role "field"')
    if entrance is None:
        report.add("error", "document", None, 'missing required feature with role "entrance"')
    if not patches:
        report.add("error", "document", None, 'at least one feature with role "patch" is required')
    if not report.ok:
        return None, report

    if crs == CRS_LONLAT:
        lon0 = sum(x for x, _ in field_ring) / len(field_ring)
        lat0 = sum(y for _, y in field_ring) / len(field_ring)
        field_ring = _project_lonlat(field_ring, lon0, lat0)
        obstacles = [_project_lonlat(o, lon0, lat0) for o in obstacles]
        patches = [_project_lonlat(p, lon0, lat0) for p in patches]
        entrance = _project_lonlat([entrance], lon0, lat0)[0]

    instance, vreport = model.validate_instance(field_ring, obstacles, patches, entrance, config)
    report.issues.extend(vreport.issues)
    return instance, report


def load_instance(path, config: model.PlannerConfig):
    return parse_instance(Path(path).read_text(encoding="utf-8"), config)


def _ring_coords(poly) -> List[List[float]]:
    ring = [[float(x), float(y)] for x, y in poly.vertices]
    ring.append(ring[0])
    return ring


def instance_document(instance: model.ProblemInstance) -> dict:
    """Emit a validated instance back as a feature-collection document (meters)."""
    features = [
        {"type": "Feature", "properties": {"role": "field"},
         "geometry": {"type": "Polygon", "coordinates": [_ring_coords(instance.field)]}},
        {"type": "Feature", "properties": {"role": "entrance"},
         "geometry": {"type": "Point",
                      "coordinates": [float(instance.entrance.x), float(instance.entrance.y)]}},
    ]
    for k, obs in enumerate(instance.obstacles):
        features.append({"type": "Feature", "properties": {"role": "obstacle", "id": f"obstacle-{k}"},
                         "geometry": {"type": "Polygon", "coordinates": [_ring_coords(obs)]}})
    for k, patch in enumerate(instance.patches):
        features.append({"type": "Feature", "properties": {"role": "patch", "id": f"patch-{k}"},
                         "geometry": {"type": "Polygon", "coordinates": [_ring_coords(patch)]}})
    return {"type": "FeatureCollection", "crs": CRS_METERS, "features": features}


def report_dict(report: assemble.MissionReport) -> Dict[str, object]:
    """Scalar report fields in a fixed order (the CSV column set)."""
    out: Dict[str, object] = {}
    for f in dc_fields(assemble.MissionReport):
        if f.name in ("per_patch", "warnings"):
            continue
        val = getattr(report, f.name)
        if isinstance(val, tuple):
            val = "+".join(str(v) for v in val)
        out[f.name] = val
    return out


REPORT_COLUMNS = [f.name for f in dc_fields(assemble.MissionReport)
                  if f.name not in ("per_patch", "warnings")]


def write_report_csv(fp, reports: Sequence[assemble.MissionReport]) -> None:
    writer = csv.DictWriter(fp, fieldnames=REPORT_COLUMNS)
    writer.writeheader()
    for rep in reports:
        writer.writerow(report_dict(rep))


def mission_path_document(mission: assemble.MissionPath,
                          report: assemble.MissionReport) -> dict:
    """Tagged line-string document: one feature per leg plus the report and
    per-patch table embedded as collection properties."""
    features = []
    for k, leg in enumerate(mission.legs):
        features.append({
            "type": "Feature",
            "properties": {"leg": k, "tag": leg.tag,
                           "patch": leg.patch, "length_m": leg.length},
            "geometry": {"type": "LineString",
                         "coordinates": [[float(p.x), float(p.y)] for p in leg.points]},
        })
    per_patch = [{
        "index": r.index, "needs_coverage": r.needs_coverage, "method": r.method,
        "entry": [r.entry.x, r.entry.y], "exit": [r.exit.x, r.exit.y],
        "length_classic_m": r.length_classic, "length_optimised_m": r.length_optimised,
        "length_used_m": r.length_used, "lane_count": r.lane_count,
    } for r in report.per_patch]
    return {
        "type": "FeatureCollection",
        "crs": CRS_METERS,
        "properties": {
            "visit_order": list(mission.visit_order.sequence),
            "total_length_m": mission.total_length,
            "report": report_dict(report),
            "per_patch": per_patch,
        },
        "features": features,
    }


def parse_path_document(doc: dict) -> List[Tuple[str, Optional[int], List[Tuple[float, float]]]]:
    """Read a mission path document back as (tag, patch, coordinates) legs."""
    legs = []
    for feat in doc.get("features", []):
        props = feat.get("properties") or {}
        coords = [(float(x), float(y)) for x, y in feat["geometry"]["coordinates"]]
        legs.append((props.get("tag"), props.get("patch"), coords))
    return legs


_TAG_COLORS = {"transit": "#1f77b4", "detour": "#e6821e", "coverage": "#2e8b57"}


def render_svg(mission: assemble.MissionPath, instance: model.ProblemInstance,
               width_px: int = 840) -> str:
    """Deterministic vector rendering: field outline, obstacles red, patches
    gray with index labels, path colored by tag, entrance marker."""
    minx, miny, maxx, maxy = instance.field.bounds
    pad = 0.05 * max(maxx - minx, maxy - miny, 1.0)
    minx -= pad
    miny -= pad
    maxx += pad
    maxy += pad
    scale = (width_px) / max(maxx - minx, 1e-9)
    height_px = (maxy - miny) * scale

    def pt(p) -> str:
        return f"{(p[0] - minx) * scale:.2f},{(maxy - p[1]) * scale:.2f}"

    def ring_path(poly) -> str:
        return "M " + " L ".join(pt(v) for v in poly.vertices) + " Z"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px} {height_px:.0f}">',
        f"<title>spot-spraying mission, total length {mission.total_length:.1f} m, "
        f"visit order {'-'.join(str(n) for n in mission.visit_order.sequence)}</title>",
        f'<rect width="{width_px}" height="{height_px:.0f}" fill="#ffffff"/>',
        f'<path d="{ring_path(instance.field)}" fill="#f7f6ef" stroke="#444444" stroke-width="1.5"/>',
    ]
    for k, obs in enumerate(instance.obstacles):
        lines.append(f'<path class="obstacle" d="{ring_path(obs)}" fill="#d64545" '
                     f'fill-opacity="0.85" stroke="#8c1d1d" stroke-width="1"/>')
    label_size = max(10.0, 0.018 * width_px)
    for k, patch in enumerate(instance.patches):
        lines.append(f'<path class="patch" d="{ring_path(patch)}" fill="#c9c9c9" '
                     f'fill-opacity="0.9" stroke="#8a8a8a" stroke-width="1"/>')
    for k, patch in enumerate(instance.patches):
        cx, cy = patch.centroid
        lines.append(f'<text x="{(cx - minx) * scale:.2f}" y="{(maxy - cy) * scale:.2f}" '
                     f'font-family="sans-serif" font-size="{label_size:.1f}" '
                     f'text-anchor="middle" fill="#333333">{k}</text>')
    for tag in ("transit", "detour", "coverage"):
        for leg in mission.legs:
            if leg.tag != tag:
                continue
            pts = " ".join(pt(p) for p in leg.points)
            lines.append(f'<polyline class="{tag}" points="{pts}" fill="none" '
                         f'stroke="{_TAG_COLORS[tag]}" stroke-width="1.2"/>')
    ex, ey = instance.entrance
    lines.append(f'<circle cx="{(ex - minx) * scale:.2f}" cy="{(maxy - ey) * scale:.2f}" '
                 f'r="4" fill="#000000"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spotspray",
        description="Plan a minimal-length UAV spot-spraying mission over patch polygons "
                    "inside a field contour, avoiding obstacle areas.")
    p.add_argument("--input", required=True, help="instance document (feature collection)")
    p.add_argument("--width", type=float, default=2.0, help="operating width W in meters")
    p.add_argument("--time-limit", type=float, default=10.0,
                   help="wall-clock budget per sampling heuristic (h1/h2/h3), seconds")
    p.add_argument("--seed", type=int, default=0, help="seed for the sampling heuristics")
    p.add_argument("--tsp-init", choices=list(model.VALID_TSP_INITS), default="nn")
    p.add_argument("--tsp-refine", default="h4",
                   help="comma-separated refinement heuristics out of h1,h2,h3,h4")
    p.add_argument("--coverage", choices=list(model.VALID_COVERAGE), default="optimised")
    p.add_argument("--exit-transition", choices=list(model.VALID_EXIT_TRANSITIONS),
                   default="straight")
    p.add_argument("--compare-coverage", action="store_true",
                   help="emit both coverage methods plus the savings comparison")
    p.add_argument("--move-budget", type=int, default=None,
                   help="use a move-count budget instead of the wall clock (reproducible runs)")
    p.add_argument("--obstacle-method", choices=list(model.VALID_OBSTACLE_METHODS),
                   default="tangent")
    p.add_argument("--safety-margin", type=float, default=0.0,
                   help="inflate obstacle hulls by this many meters")
    p.add_argument("--svg", default=None, help="write the rendering here")
    p.add_argument("--out", default=None, help="write the path document here")
    p.add_argument("--report", default=None, help="write the CSV report here")
    return p


def _suffixed(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix + path.suffix)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    err = sys.stderr
    try:
        config = model.PlannerConfig(
            width=args.width,
            time_limit=args.time_limit,
            seed=args.seed,
            tsp_init=args.tsp_init,
            tsp_refine=tuple(h.strip().lower() for h in args.tsp_refine.split(",") if h.strip()),
            coverage_method=args.coverage,
            exit_transition=args.exit_transition,
            move_budget=args.move_budget,
            obstacle_method=args.obstacle_method,
            safety_margin=args.safety_margin,
        )
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=err)
        return 2

    in_path = Path(args.input)
    try:
        text = in_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read input: {exc}", file=err)
        return 2

    instance, report = parse_instance(text, config)
    for issue in report.warnings:
        print(str(issue), file=err)
    if instance is None:
        for issue in report.errors:
            print(str(issue), file=err)
        print("instance rejected; nothing planned", file=err)
        return 2

    stem = in_path.stem
    out_path = Path(args.out) if args.out else Path(f"{stem}_path.geojson")
    report_path = Path(args.report) if args.report else Path(f"{stem}_report.csv")
    svg_path = Path(args.svg) if args.svg else Path(f"{stem}_mission.svg")

    try:
        if args.compare_coverage:
            results = assemble.plan_mission_compare(instance)
            reports = []
            for method in ("classic", "optimised"):
                mission, mrep = results[method]
                reports.append(mrep)
                for w in mrep.warnings:
                    print(f"warning: {w}", file=err)
                _suffixed(out_path, f"_{method}").write_text(
                    json.dumps(mission_path_document(mission, mrep), indent=1), encoding="utf-8")
                _suffixed(svg_path, f"_{method}").write_text(
                    render_svg(mission, instance), encoding="utf-8")
            with open(report_path, "w", newline="", encoding="utf-8") as fp:
                write_report_csv(fp, reports)
            opt = results["optimised"][1]
            print(f"planned {opt.n_patches_all} patches ({opt.n_patches_covg} with coverage); "
                  f"tour {opt.l_tsp:.2f} m; total classic {opt.l_total_classic:.2f} m, "
                  f"optimised {opt.l_total_optim:.2f} m "
                  f"(savings {opt.savings_m:.2f} m, {100 * opt.savings_pct:.1f}% of coverage)")
        else:
            mission, mrep = assemble.plan_mission(instance)
            for w in mrep.warnings:
                print(f"warning: {w}", file=err)
            out_path.write_text(json.dumps(mission_path_document(mission, mrep), indent=1),
                                encoding="utf-8")
            svg_path.write_text(render_svg(mission, instance), encoding="utf-8")
            with open(report_path, "w", newline="", encoding="utf-8") as fp:
                write_report_csv(fp, [mrep])
            print(f"planned {mrep.n_patches_all} patches ({mrep.n_patches_covg} with coverage); "
                  f"tour {mrep.l_tsp:.2f} m; total {mrep.l_total:.2f} m; "
                  f"coverage share {100 * mrep.coverage_share:.1f}%")
    except Exception as exc:  # planner bug or unplannable geometry: internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
