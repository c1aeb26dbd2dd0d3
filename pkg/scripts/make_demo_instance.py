#!/usr/bin/env python3
"""Regenerate data/demo_field.geojson, the bundled demonstration instance.

Hand-laid geometry: an irregular ~5 ha field, three obstacle areas (two
ponds, one tree island) and twelve patches of mixed sizes so that both the
single-pass and the coverage planners, the obstacle detour and the
containment logic all get exercised.
"""

import json
import math
from pathlib import Path

from spotspray import io_cli, model


def rotrect(cx, cy, w, h, deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    pts = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
    return [(cx + c * x - s * y, cy + s * x + c * y) for x, y in pts]


FIELD = [(0, 0), (160, -8), (305, 12), (322, 150), (236, 228), (58, 214), (-12, 118)]
ENTRANCE = (0.0, 0.0)

OBSTACLES = [
    # pond on the main diagonal between the entrance and the north-east patches
    [(138, 96), (166, 88), (184, 108), (172, 132), (144, 128), (130, 112)],
    # small pond in the south-west, sitting on the entrance-to-first-patch line
    [(12, 22), (30, 16), (38, 32), (24, 44), (8, 36)],
    # tree island in the north
    [(196, 168), (222, 160), (236, 178), (226, 196), (200, 192)],
]

PATCHES = [
    # large, coverage-needing
    [(60, 138), (114, 138), (114, 158), (86, 158), (86, 196), (60, 196)],    # L-shape NW
    rotrect(252, 62, 46, 20, 24),                                            # rotated rectangle SE
    [(96, 170), (130, 162), (150, 180), (142, 204), (108, 208), (88, 190)],  # convex hexagon N
    [(196, 96), (244, 96), (244, 140), (228, 140), (228, 112), (212, 112),
     (212, 140), (196, 140)],                                                # U-shape E
    # small, single-pass
    rotrect(36, 52, 7, 1.6, 10),
    rotrect(118, 30, 6, 1.5, -35),
    rotrect(170, 50, 8, 1.8, 60),
    rotrect(262, 140, 6, 1.4, -15),
    rotrect(282, 100, 7, 1.7, 45),
    rotrect(150, 146, 5, 1.5, 0),
    rotrect(60, 104, 6, 1.6, 80),
    rotrect(260, 186, 6, 1.5, 30),
]


def main():
    config = model.PlannerConfig()
    instance, report = model.validate_instance(FIELD, OBSTACLES, PATCHES, ENTRANCE, config)
    for issue in report.issues:
        print(issue)
    if instance is None:
        raise SystemExit("demo geometry is invalid")
    doc = io_cli.instance_document(instance)
    out = Path(__file__).resolve().parent.parent / "data" / "demo_field.geojson"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(doc, indent=1), encoding="utf-8")
    print(f"wrote {out} ({instance.n_patches} patches, {len(instance.obstacles)} obstacles)")


if __name__ == "__main__":
    main()
