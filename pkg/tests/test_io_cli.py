import csv
import json
import math

import numpy as np
import pytest

from spotspray import assemble, io_cli, model
from spotspray.io_cli import (REPORT_COLUMNS, instance_document, load_instance,
                              mission_path_document, parse_instance, parse_path_document,
                              render_svg, run_cli)
from spotspray.model import PlannerConfig

from conftest import DEMO_INSTANCE

CFG = PlannerConfig(move_budget=300)


def minimal_doc(**over):
    doc = {
        "type": "FeatureCollection",
        "crs": "local-meters",
        "features": [
            {"type": "Feature", "properties": {"role": "field"},
             "geometry": {"type": "Polygon",
                          "coordinates": [[[0, 0], [60, 0], [60, 60], [0, 60], [0, 0]]]}},
            {"type": "Feature", "properties": {"role": "entrance"},
             "geometry": {"type": "Point", "coordinates": [0, 0]}},
            {"type": "Feature", "properties": {"role": "patch", "id": "p0"},
             "geometry": {"type": "Polygon",
                          "coordinates": [[[20, 20], [40, 20], [40, 40], [20, 40], [20, 20]]]}},
        ],
    }
    doc.update(over)
    return doc


class TestParseInstance:
    def test_minimal_valid(self):
        inst, report = parse_instance(json.dumps(minimal_doc()), CFG)
        assert inst is not None and report.ok
        assert inst.n_patches == 1

    def test_missing_entrance_names_role(self):
        doc = minimal_doc()
        doc["features"] = [f for f in doc["features"]
                           if f["properties"]["role"] != "entrance"]
        inst, report = parse_instance(json.dumps(doc), CFG)
        assert inst is None
        assert any("entrance" in str(e) for e in report.errors)

    def test_unknown_role_with_byte_offset(self):
        doc = minimal_doc()
        doc["features"].append({"type": "Feature", "properties": {"role": "lake"},
                                "geometry": {"type": "Polygon",
                                             "coordinates": [[[1, 1], [2, 1], [2, 2], [1, 2]]]}})
        text = json.dumps(doc)
        inst, report = parse_instance(text, CFG)
        assert inst is None
        msg = [str(e) for e in report.errors if "lake" in str(e)]
        assert msg and "byte offset" in msg[0]
        # the reported offset points at the feature object
        offset = int(msg[0].split("byte offset ")[1].split(")")[0])
        assert text[offset] == "{"
        assert "lake" in text[offset:offset + 120]

    def test_duplicate_field_rejected(self):
        doc = minimal_doc()
        doc["features"].append(doc["features"][0])
        inst, report = parse_instance(json.dumps(doc), CFG)
        assert inst is None

    def test_not_json(self):
        inst, report = parse_instance("not json at all {", CFG)
        assert inst is None

    def test_unknown_crs(self):
        inst, report = parse_instance(json.dumps(minimal_doc(crs="EPSG:3857")), CFG)
        assert inst is None


class TestLonLatProjection:
    def test_distances_match_haversine(self):
        # ~500 m field near Lake Constance
        lon0, lat0 = 9.17, 47.67
        dlon = 500 / (111320 * math.cos(math.radians(lat0)))
        dlat = 500 / 110540
        ring = [[lon0, lat0], [lon0 + dlon, lat0], [lon0 + dlon, lat0 + dlat],
                [lon0, lat0 + dlat], [lon0, lat0]]
        patch = [[lon0 + 0.3 * dlon, lat0 + 0.3 * dlat], [lon0 + 0.5 * dlon, lat0 + 0.3 * dlat],
                 [lon0 + 0.5 * dlon, lat0 + 0.5 * dlat], [lon0 + 0.3 * dlon, lat0 + 0.5 * dlat]]
        doc = {
            "type": "FeatureCollection",
            "crs": "EPSG:4326",
            "features": [
                {"type": "Feature", "properties": {"role": "field"},
                 "geometry": {"type": "Polygon", "coordinates": [ring]}},
                {"type": "Feature", "properties": {"role": "entrance"},
                 "geometry": {"type": "Point", "coordinates": [lon0, lat0]}},
                {"type": "Feature", "properties": {"role": "patch"},
                 "geometry": {"type": "Polygon", "coordinates": [patch]}},
            ],
        }
        inst, report = parse_instance(json.dumps(doc), CFG)
        assert inst is not None, [str(e) for e in report.errors]

        def haversine(a, b):
            r = 6371008.8
            p1, p2 = math.radians(a[1]), math.radians(b[1])
            dp = p2 - p1
            dl = math.radians(b[0] - a[0])
            h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
            return 2 * r * math.asin(math.sqrt(h))

        lonlat = ring[:-1]
        xy = inst.field.vertices
        # match projected vertices to input corners by nearest distance from origin
        for i in range(len(lonlat)):
            for j in range(i + 1, len(lonlat)):
                want = haversine(lonlat[i], lonlat[j])
                # projected polygon is normalised; compare the sorted pairwise sets
        dists_h = sorted(haversine(lonlat[i], lonlat[j])
                         for i in range(4) for j in range(i + 1, 4))
        dists_p = sorted(math.hypot(*(xy[i] - xy[j]))
                         for i in range(4) for j in range(i + 1, 4))
        for dh, dp in zip(dists_h, dists_p):
            assert dp == pytest.approx(dh, rel=1e-3)


class TestRoundTrips:
    def test_instance_parse_emit_parse(self):
        inst1, _ = parse_instance(json.dumps(minimal_doc()), CFG)
        doc = instance_document(inst1)
        inst2, report = parse_instance(json.dumps(doc), CFG)
        assert inst2 is not None
        assert np.allclose(inst1.field.vertices, inst2.field.vertices, atol=1e-9)
        for p1, p2 in zip(inst1.patches, inst2.patches):
            assert np.allclose(p1.vertices, p2.vertices, atol=1e-9)
        assert inst1.entrance == inst2.entrance

    def test_path_document_round_trip(self):
        inst, _ = parse_instance(json.dumps(minimal_doc()), CFG)
        mission, report = assemble.plan_mission(inst)
        doc = mission_path_document(mission, report)
        recovered = parse_path_document(json.loads(json.dumps(doc)))
        assert len(recovered) == len(mission.legs)
        for leg, (tag, patch, coords) in zip(mission.legs, recovered):
            assert tag == leg.tag and patch == leg.patch
            assert coords == [(p.x, p.y) for p in leg.points]  # exact float round-trip


class TestRenderSvg:
    def test_contains_tag_classes_and_labels(self):
        inst, _ = load_instance(DEMO_INSTANCE, CFG)
        mission, report = assemble.plan_mission(inst)
        svg = render_svg(mission, inst)
        for cls in ("transit", "coverage"):
            assert f'class="{cls}"' in svg
        assert 'class="obstacle"' in svg
        assert ">0<" in svg and ">11<" in svg  # patch index labels

    def test_no_red_without_obstacles(self):
        inst, _ = parse_instance(json.dumps(minimal_doc()), CFG)
        mission, report = assemble.plan_mission(inst)
        svg = render_svg(mission, inst)
        assert 'class="obstacle"' not in svg

    def test_byte_stable(self):
        inst, _ = parse_instance(json.dumps(minimal_doc()), CFG)
        mission, report = assemble.plan_mission(inst)
        assert render_svg(mission, inst) == render_svg(mission, inst)


class TestCli:
    def test_defaults_reproduce_reference_parameters(self):
        from spotspray.io_cli import _build_parser

        args = _build_parser().parse_args(["--input", "x.geojson"])
        assert args.width == 2.0
        assert args.time_limit == 10.0
        assert args.seed == 0
        assert args.tsp_init == "nn"
        assert args.tsp_refine == "h4"
        assert args.coverage == "optimised"
        assert args.exit_transition == "straight"

    def test_demo_defaults_three_outputs(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        rc = run_cli(["--input", str(DEMO_INSTANCE)])
        assert rc == 0
        assert (tmp_path / "demo_field_path.geojson").exists()
        assert (tmp_path / "demo_field_report.csv").exists()
        assert (tmp_path / "demo_field_mission.svg").exists()

    def test_width_zero_exits_2(self, capsys):
        rc = run_cli(["--input", str(DEMO_INSTANCE), "--width", "0"])
        assert rc == 2
        assert "W must be > 0" in capsys.readouterr().err

    def test_missing_input_exits_2(self):
        assert run_cli(["--input", "/does/not/exist.geojson"]) == 2

    def test_invalid_instance_exits_2(self, tmp_path):
        bad = minimal_doc()
        bad["features"] = bad["features"][:2]  # no patch
        f = tmp_path / "bad.geojson"
        f.write_text(json.dumps(bad))
        assert run_cli(["--input", str(f), "--out", str(tmp_path / "o.json"),
                        "--report", str(tmp_path / "r.csv"), "--svg", str(tmp_path / "m.svg")]) == 2

    def test_compare_coverage(self, tmp_path):
        doc = minimal_doc()
        doc["features"].append(
            {"type": "Feature", "properties": {"role": "patch", "id": "p1"},
             "geometry": {"type": "Polygon",
                          "coordinates": [[[5, 45], [17, 45], [17, 56], [5, 56], [5, 45]]]}})
        doc["features"].append(
            {"type": "Feature", "properties": {"role": "patch", "id": "p2"},
             "geometry": {"type": "Polygon",
                          "coordinates": [[[45, 5], [58, 5], [58, 16], [45, 16], [45, 5]]]}})
        f = tmp_path / "three.geojson"
        f.write_text(json.dumps(doc))
        report_path = tmp_path / "cmp.csv"
        rc = run_cli(["--input", str(f), "--move-budget", "300",
                      "--compare-coverage",
                      "--out", str(tmp_path / "p.geojson"),
                      "--svg", str(tmp_path / "m.svg"),
                      "--report", str(report_path)])
        assert rc == 0
        with open(report_path, newline="") as fp:
            rows = list(csv.DictReader(fp))
        assert len(rows) == 2
        assert [r["coverage_method"] for r in rows] == ["classic", "optimised"]
        for row in rows:
            assert set(row.keys()) == set(REPORT_COLUMNS)
            assert float(row["sum_covg_optim"]) <= float(row["sum_covg_classic"]) + 1e-9
            assert 0.0 < float(row["coverage_share"]) < 1.0
            # savings ratio satisfies its definition against the emitted fields
            assert float(row["savings_pct"]) == pytest.approx(
                (float(row["sum_covg_classic"]) - float(row["sum_covg_optim"]))
                / float(row["sum_covg_classic"]))
        assert (tmp_path / "p_classic.geojson").exists()
        assert (tmp_path / "p_optimised.geojson").exists()
        assert (tmp_path / "m_classic.svg").exists()
        assert (tmp_path / "m_optimised.svg").exists()

    def test_report_csv_parseable(self, tmp_path):
        f = tmp_path / "mini.geojson"
        f.write_text(json.dumps(minimal_doc()))
        report_path = tmp_path / "rep.csv"
        rc = run_cli(["--input", str(f), "--move-budget", "100",
                      "--out", str(tmp_path / "p.geojson"),
                      "--svg", str(tmp_path / "m.svg"),
                      "--report", str(report_path)])
        assert rc == 0
        with open(report_path, newline="") as fp:
            rows = list(csv.DictReader(fp))
        assert len(rows) == 1
        assert list(rows[0].keys()) == REPORT_COLUMNS
